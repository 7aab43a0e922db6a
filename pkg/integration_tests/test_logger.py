import logging
import unittest

from proxcomp.objects import Logger
from proxcomp.utils.constants import Constants

Logger.DISABLED = True


class TestLogger(unittest.TestCase):

    def setUp(self):
        self.logger = Logger.get_instance()
        self.logger.set_level(logging.INFO)

    def tearDown(self):
        Logger.DISABLED = True
        self.logger.set_level(logging.NOTSET, stage=Constants.STAGE_SOLVER)
        self.logger.set_level(logging.INFO)

    def test_singleton(self):
        self.assertIs(Logger.get_instance(), self.logger)
        with self.assertRaises(Exception):
            Logger()

    def test_stage_messages_are_formatted_lazily(self):
        Logger.DISABLED = False
        with self.assertLogs('proxcomp.solver', level='INFO') as captured:
            self.logger.log('iter %d: primal %.1e', 3, 0.5, stage=Constants.STAGE_SOLVER)
        self.assertEqual(captured.records[0].getMessage(), 'iter 3: primal 5.0e-01')

    def test_disabled_is_silent(self):
        self.assertFalse(self.logger.enabled_for(logging.INFO))
        Logger.DISABLED = False
        self.assertTrue(self.logger.enabled_for(logging.INFO))
        self.assertFalse(self.logger.enabled_for(logging.DEBUG))

    def test_stage_level(self):
        Logger.DISABLED = False
        self.logger.set_level('debug', stage=Constants.STAGE_SOLVER)
        self.assertTrue(self.logger.enabled_for(logging.DEBUG, stage=Constants.STAGE_SOLVER))
        self.assertFalse(self.logger.enabled_for(logging.DEBUG, stage=Constants.STAGE_COMPILER))

    def test_unknown_level(self):
        with self.assertRaises(ValueError):
            self.logger.set_level('loud')


if __name__ == '__main__':
    unittest.main()
