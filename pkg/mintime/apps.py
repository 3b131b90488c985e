from django.apps import AppConfig


class MintimeConfig(AppConfig):
    name = 'mintime'
