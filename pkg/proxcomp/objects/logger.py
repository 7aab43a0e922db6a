import logging
import os

from proxcomp.utils.constants import Constants

FORMAT = '%(asctime)s: %(name)s: %(message)s'
logging.basicConfig(format=FORMAT)


class Logger(object):
    """
    Process wide logger of the pipeline. Every stage (compiler, separator, solver, runner)
    logs under its own child of the 'proxcomp' logger so one stage can be made verbose alone.
    Messages take printf style arguments that are only formatted when the record is emitted.
    """
    __instance = None
    DISABLED = True

    @staticmethod
    def get_instance():
        if Logger.__instance is None:
            Logger()
        return Logger.__instance

    def __init__(self):
        if Logger.__instance is None:
            self.logger = logging.getLogger(Constants.LOGGER_NAME)
            self.logger.setLevel(_level_from_environment())
            Logger.__instance = self
        else:
            raise Exception('this is a singleton class')

    def set_level(self, level, stage=None):
        """
        Sets the level of the root logger or of one stage.

        Args:
            level (int or str): A logging level such as logging.DEBUG or 'debug'.
            stage (str): The stage name, None for all of them.
        """
        self._channel(stage).setLevel(_parse_level(level))

    def enabled_for(self, level, stage=None):
        return not Logger.DISABLED and self._channel(stage).isEnabledFor(level)

    def warn(self, message, *args, stage=None):
        if not Logger.DISABLED:
            self._channel(stage).warning(message, *args)

    def error(self, message, *args, stage=None):
        if not Logger.DISABLED:
            self._channel(stage).error(message, *args)

    def log(self, message, *args, stage=None):
        if not Logger.DISABLED:
            self._channel(stage).info(message, *args)

    def debug(self, message, *args, stage=None):
        if not Logger.DISABLED:
            self._channel(stage).debug(message, *args)

    def _channel(self, stage):
        if stage is None:
            return self.logger
        return self.logger.getChild(stage)


def _parse_level(level):
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError('unknown log level %r' % level)
    return value


def _level_from_environment():
    value = os.environ.get(Constants.LOG_LEVEL_ENV)
    if value is None:
        return logging.INFO
    try:
        return _parse_level(value)
    except ValueError:
        return logging.INFO
