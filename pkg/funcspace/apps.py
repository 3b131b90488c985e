from django.apps import AppConfig


class FuncspaceConfig(AppConfig):
    name = 'funcspace'
