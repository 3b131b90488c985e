from django.apps import AppConfig


class RegularityConfig(AppConfig):
    name = 'regularity'
