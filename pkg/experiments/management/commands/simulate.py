from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Integrate one configured history under a control and write the trajectory CSV.'
    command_name = 'simulate'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--history', required=True, help='Name of a history in experiments.histories.')
        parser.add_argument('--control', default='0', help='Control spec: "2" or "1@0,0@0.5".')

    def command_options(self, options) -> dict:
        return {'history': options['history'], 'control': options['control']}
