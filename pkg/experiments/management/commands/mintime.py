from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compute the reference minimum time of one configured history.'
    command_name = 'mintime'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--history', required=True, help='Name of a history in experiments.histories.')

    def command_options(self, options) -> dict:
        return {'history': options['history']}
