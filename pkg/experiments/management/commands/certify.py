from experiments.management.base import ExperimentCommand
from experiments.services import CHECKS


class Command(ExperimentCommand):
    help = 'Run one regularity certification and write its text and CSV report.'
    command_name = 'certify'

    def add_arguments(self, parser):
        parser.add_argument('check', choices=CHECKS)
        super().add_arguments(parser)

    def command_options(self, options) -> dict:
        return {'check': options['check']}
