"""Create problems and runs tables

Revision ID: 3c1d7e9a4b20
Revises: 
Create Date: 2026-10-17 09:12:05.418223

"""
from alembic import op
import sqlalchemy as sa


# revision identifiers, used by Alembic.
revision = '3c1d7e9a4b20'
down_revision = None
branch_labels = None
depends_on = None


def upgrade():
    op.create_table('problems',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('kind', sa.String(length=32), nullable=False),
    sa.Column('n_qubits', sa.Integer(), nullable=False),
    sa.Column('spec_json', sa.Text(), nullable=False),
    sa.Column('digest', sa.String(length=64), nullable=False),
    sa.Column('obj_max', sa.Float(), nullable=True),
    sa.Column('created_at', sa.DateTime(), nullable=False),
    sa.CheckConstraint('n_qubits >= 1', name='ck_problems_n_qubits_positive'),
    sa.PrimaryKeyConstraint('id')
    )
    with op.batch_alter_table('problems', schema=None) as batch_op:
        batch_op.create_index(batch_op.f('ix_problems_digest'), ['digest'], unique=True)
        batch_op.create_index(batch_op.f('ix_problems_kind'), ['kind'], unique=False)

    op.create_table('runs',
    sa.Column('id', sa.Integer(), nullable=False),
    sa.Column('problem_id', sa.Integer(), nullable=True),
    sa.Column('command', sa.String(length=16), nullable=False),
    sa.Column('method', sa.String(length=32), nullable=True),
    sa.Column('p', sa.Integer(), nullable=True),
    sa.Column('total_time', sa.Float(), nullable=True),
    sa.Column('ratio', sa.Float(), nullable=True),
    sa.Column('total_error', sa.Float(), nullable=True),
    sa.Column('config_json', sa.Text(), nullable=False),
    sa.Column('config_digest', sa.String(length=64), nullable=False),
    sa.Column('result_json', sa.Text(), nullable=False),
    sa.Column('created_at', sa.DateTime(), nullable=False),
    sa.CheckConstraint('p IS NULL OR p >= 1', name='ck_runs_p_positive'),
    sa.CheckConstraint('total_time IS NULL OR total_time > 0', name='ck_runs_total_time_positive'),
    sa.ForeignKeyConstraint(['problem_id'], ['problems.id'], ),
    sa.PrimaryKeyConstraint('id')
    )
    with op.batch_alter_table('runs', schema=None) as batch_op:
        batch_op.create_index(batch_op.f('ix_runs_command'), ['command'], unique=False)
        batch_op.create_index(batch_op.f('ix_runs_config_digest'), ['config_digest'], unique=False)
        batch_op.create_index(batch_op.f('ix_runs_created_at'), ['created_at'], unique=False)
        batch_op.create_index(batch_op.f('ix_runs_problem_id'), ['problem_id'], unique=False)


def downgrade():
    with op.batch_alter_table('runs', schema=None) as batch_op:
        batch_op.drop_index(batch_op.f('ix_runs_problem_id'))
        batch_op.drop_index(batch_op.f('ix_runs_created_at'))
        batch_op.drop_index(batch_op.f('ix_runs_config_digest'))
        batch_op.drop_index(batch_op.f('ix_runs_command'))

    op.drop_table('runs')
    with op.batch_alter_table('problems', schema=None) as batch_op:
        batch_op.drop_index(batch_op.f('ix_problems_kind'))
        batch_op.drop_index(batch_op.f('ix_problems_digest'))

    op.drop_table('problems')
