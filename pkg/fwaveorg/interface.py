"""
Interface definition for powerline interference filters.
"""

import abc


class PowerlineFilterInterface(abc.ABC):
    """
    Abstract interface for powerline filters.
    """

    @property
    @abc.abstractmethod
    def method(self):
        """
        Name under which the filter is registered in the configuration.
        """

    @abc.abstractmethod
    def check_validity(self, sampling_rate):
        """
        Check the filter settings against a sampling rate. This will raise
        a ``BadParams`` if the settings cannot be applied, but return
        otherwise.
        """

    @abc.abstractmethod
    def apply(self, samples, sampling_rate):
        """
        Return ``samples`` with mains interference suppressed.

        The output has the same length as the input.
        """

    @abc.abstractmethod
    def describe(self, sampling_rate):
        """
        Return a dictionary of the effective settings for the processing
        log.
        """
