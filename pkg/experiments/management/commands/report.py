from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run every configured validation, oracle, steering and certification and write summary.csv.'
    command_name = 'report'
