from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Validate the standing hypotheses and print the derived steering constants.'
    command_name = 'validate'
