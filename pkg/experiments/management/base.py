from django.core.management.base import BaseCommand, CommandError

from experiments.services import EXIT_OK, ExperimentService


class ExperimentCommand(BaseCommand):
    """A management command that runs one ExperimentService command on a config file."""
    command_name = ''

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to the problem config (JSON).')
        parser.add_argument('--output-dir', dest='output_dir', default=None, help='Directory for the artifacts.')
        parser.add_argument('--seed', type=int, default=0, help='Seed for the sampling-based validators.')

    def command_options(self, options) -> dict:
        return {}

    def handle(self, *args, **options):
        status, message, _ = ExperimentService.run(
            self.command_name,
            options['config'],
            options['output_dir'],
            seed=options['seed'],
            **self.command_options(options),
        )

        if status != EXIT_OK:
            raise CommandError(message, returncode=status)

        self.stdout.write(self.style.SUCCESS(message))
