import os
from pathlib import Path

import yaml

from superdyn.utils.exceptions import ConfigError


_settings_file = 'settings.yaml'
_threads_env = 'SUPERDYN_THREADS'


class config:
    """Settings of the package.

    `default_settings` holds `settings.yaml`; the numeric profile named by
    `default_settings['profile']` (or by `name`) is unpacked into attributes.
    """

    def __init__(self, name: str = None):
        self.default_settings = self.settings()

        if name is not None:
            self.default_settings['profile'] = name

        self.default_settings['threads'] = self.threads()

        (self.tol, self.n_max, self.epsilon, self.record_only, self.stop_at_epsilon,
         self.chunk_size, self.qr_sweeps_per_dim2, self.power_iteration_cap,
         self.power_iteration_rtol) = self.profile()

    @property
    def name(self) -> str:
        return self.default_settings['profile']

    def settings(self) -> dict:
        """load the settings.yaml file."""
        direc = Path(__file__).resolve().parent
        with open(str(direc / _settings_file), 'r') as stream:
            return yaml.safe_load(stream)

    def threads(self) -> int:
        """Thread cap for witness search, SUPERDYN_THREADS wins over settings.yaml."""
        value = os.environ.get(_threads_env)
        if value is None or value.strip() == '':
            value = self.default_settings.get('threads', 0)
        try:
            threads = int(value)
        except (TypeError, ValueError):
            raise ConfigError('%s must be an integer, got %r' % (_threads_env, value))
        if threads < 0:
            raise ConfigError('%s must be >= 0, got %d' % (_threads_env, threads))
        return threads

    def effective_threads(self) -> int:
        threads = self.default_settings['threads']
        if threads == 0:
            threads = os.cpu_count() or 1
        return threads

    def profile(self):
        """load the numeric profile <profile>.yaml file."""
        direc = Path(__file__).resolve().parent
        file = direc / ('%s.yaml' % self.default_settings['profile'])
        if not file.is_file():
            raise ConfigError('No such profile: %s' % self.default_settings['profile'])
        with open(str(file), 'r') as stream:
            default = yaml.safe_load(stream)

        try:
            search = default['search']
            kernel = default['kernel']
            values = (
                float(default['tol']),
                int(search['n_max']),
                float(search['epsilon']),
                bool(search['record_only']),
                bool(search['stop_at_epsilon']),
                int(search['chunk_size']),
                int(kernel['qr_sweeps_per_dim2']),
                int(kernel['power_iteration_cap']),
                float(kernel['power_iteration_rtol']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError('Malformed profile %s: %s' % (file.name, e))

        if values[0] <= 0 or values[1] < 1 or values[2] <= 0 or values[5] < 1:
            raise ConfigError('Profile %s: tol, n_max, epsilon and chunk_size must be positive'
                              % file.name)
        return values


if __name__ == '__main__':
    data = config()
    print(data.default_settings['profile'])
    print(data.tol, data.n_max, data.epsilon)
