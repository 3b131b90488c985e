from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Steer one configured history to the target and write the steering log CSV.'
    command_name = 'steer'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--history', required=True, help='Name of a history in experiments.histories.')

    def command_options(self, options) -> dict:
        return {'history': options['history']}
