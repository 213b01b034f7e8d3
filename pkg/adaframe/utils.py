# stdlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
# libs
from jinja2 import Environment, FileSystemLoader, meta, Template
# local


__all__ = [
    'CONFIG_KEYS',
    'check_template_data',
    'format_g17',
    'load_learn_config',
    'parse_float_list',
    'parse_int_list',
    'JINJA_ENV',
    'StageErrorFormatter',
]

adaframe_directory = os.path.dirname(os.path.abspath(__file__))


def format_g17(value) -> str:
    """17 significant digits, enough for a bit-exact float64 round trip."""
    return format(float(value), '.17g')


JINJA_ENV = Environment(
    loader=FileSystemLoader(f'{adaframe_directory}/templates'),
    trim_blocks=True,
)
JINJA_ENV.filters['g17'] = format_g17

# JSON config key -> LearnConfig field
CONFIG_KEYS = {
    'm': 'm',
    'support': 'support',
    'samplingDiag': 'M',
    'eta': 'eta',
    'lambda': 'lam',
    'sparsity': 'sparsity',
    'huberDelta': 'huber_delta',
    'init': 'init',
    'initName': 'init_name',
    'maxOuter': 'max_outer',
    'relTolerance': 'rel_tolerance',
    'lowpassConstraint': 'lowpass_constraint',
    'seed': 'seed',
    'restarts': 'restarts',
    'constraintTolerance': 'constraint_tolerance',
    'channelSupport': 'channel_support',
    'channelSampling': 'channel_sampling',
    'aStepOuter': 'a_step_outer',
    'aStepInner': 'a_step_inner',
    'cgIterations': 'cg_iterations',
    'cgTolerance': 'cg_tolerance',
    'alpha': 'alpha',
}


def check_template_data(template_data: Dict[str, Any], template: Template) -> Tuple[bool, str]:
    """
    Verifies for any key in template_data is missing.
    :param template_data: dictionary object that must have all the template_keys.
    :param template: The template to be verified
    :return: tuple of boolean flag, success and the error string if any
    """
    with open(str(template.filename), 'r') as fp:
        template_source = fp.read()

    parsed = JINJA_ENV.parse(source=template_source)
    required_keys = meta.find_undeclared_variables(parsed)
    err = ''
    for k in sorted(required_keys):
        if k not in template_data:
            err += f'Key `{k}` not found in template data.\n'

    success = '' == err
    return success, err


def parse_int_list(text: str) -> Tuple[int, ...]:
    """'6,6' -> (6, 6)"""
    return tuple(int(part) for part in str(text).split(',') if part.strip())


def parse_float_list(text: str) -> List[float]:
    return [float(part) for part in str(text).split(',') if part.strip()]


def load_learn_config(config_file=None, prefix=4000) -> Tuple[bool, Dict[str, Optional[Any]], str]:
    """
    Loads a JSON file of learning settings (camelCase keys) and maps it onto
    LearnConfig field names.

    :param config_file: the file to read the learning configuration from
    :param prefix: an integer that is used as base for error numbers, i.e.
        error numbers will be added to this value. Defaults to 4000.
    :return: status, {'raw': parsed JSON, 'processed': LearnConfig keyword arguments}, message
    """

    messages = {
        10: f'Config file {config_file} loaded.',
        11: f'Failed to open {config_file}: ',
        12: f'Failed to parse {config_file}: ',
        13: f'Config file {config_file} must hold a JSON object',
        14: f'Unknown keys in config file {config_file}: ',
        15: f'Invalid value for `init` in config file {config_file}: ',
    }

    config_data = {
        'raw': None,
        'processed': {}
    }

    try:
        with Path(config_file).open('r') as file:
            config = json.load(file)
    except OSError as e:
        return False, config_data, f'{prefix + 11}: {messages[11]} {e.__str__()}'
    except Exception as e:
        return False, config_data, f'{prefix + 12}: {messages[12]} {e.__str__()}'

    config_data['raw'] = config
    if not isinstance(config, dict):
        return False, config_data, f'{prefix + 13}: {messages[13]}'

    unknown = sorted(set(config) - set(CONFIG_KEYS))
    if unknown:
        return False, config_data, f'{prefix + 14}: {messages[14]}{", ".join(unknown)}'

    for key, value in config.items():
        if key in ('support', 'samplingDiag') and isinstance(value, list):
            value = tuple(value)
        config_data['processed'][CONFIG_KEYS[key]] = value

    # `init` may carry the bank name, as on the command line
    init = config_data['processed'].get('init')
    if isinstance(init, str) and init.startswith('waveletBank:'):
        config_data['processed']['init'], config_data['processed']['init_name'] = init.split(':', 1)
    elif init is not None and init not in ('randomOrthogonal', 'waveletBank'):
        return False, config_data, f'{prefix + 15}: {messages[15]}{init}'

    return True, config_data, f'{prefix + 10}: {messages[10]}'


class StageErrorFormatter:
    """Formats errors of a multi-stage command and keeps the list of stages that succeeded"""

    def __init__(self, command, successful_stages=None):
        """
        Creates a new errorFormatter.
        :param command: the command the stages belong to, e.g. learn-frame
        :param successful_stages: |
            list of stage names carried over from a different instance of this class.
        """
        self.command = command
        self.message_list = list()
        self.successful_stages = list(successful_stages or [])

    def add_successful(self, stage_name, detail=None):
        """
        Records a stage as having completed

        :param stage_name: the stage's name (str)
        :param detail: [optional] short summary of what the stage produced
        """
        self.successful_stages.append({
            'stage_name': stage_name,
            'detail': detail,
        })

    def store_stage_error(self, error, msg):
        """Formats a failed stage and keeps it for later use."""
        self.message_list.append(self._format_stage_error(error, msg))

    def stage_error(self, error, msg):
        """Formats a failed stage and returns it as a string."""
        return self._format_stage_error(error, msg)

    def _format_stage_error(self, error, msg):
        done = ', '.join(stage['stage_name'] for stage in self.successful_stages) or 'none'
        msg = f'{msg}\nCommand: {self.command}\n'
        msg += f'Completed stages: {done}\n'
        msg += f'{type(error).__name__}: {error}\n'
        return msg
