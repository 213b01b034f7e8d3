import json

import pytest

from adaframe.controllers import FilterBankDocument, LearnConfigValidator
from adaframe.controllers.exceptions import (
    InconsistentSystem,
    InvalidLearnConfig,
    NumericalFailure,
    OutOfRange,
    exception_handler,
)
from adaframe.fileio import bank_document
from adaframe.utils import (
    JINJA_ENV,
    StageErrorFormatter,
    check_template_data,
    format_g17,
    load_learn_config,
    parse_float_list,
    parse_int_list,
)
from adaframe.wavelets import haar


VALID_CONFIG = {'m': 2, 'support': (2,), 'M': (2,), 'eta': 1.0, 'lam': 0.5}


def test_exception_handler_returns_message():
    @exception_handler
    def failing():
        raise OutOfRange('keep fraction 2')

    assert failing() == str(OutOfRange('keep fraction 2'))
    assert exception_handler(lambda: None)() is None


def test_numerical_failures_share_a_base():
    assert issubclass(InconsistentSystem, NumericalFailure)
    assert 'learn_biframe_critical' in str(InconsistentSystem(0.5))


def test_learn_config_validator_passes():
    assert LearnConfigValidator(dict(VALID_CONFIG))() == (True, [])


@pytest.mark.parametrize('change,fragment', [
    ({'m': 0}, '`m` must be a positive integer'),
    ({'m': True}, '`m` must be a positive integer'),
    ({'support': (0,)}, '`support`'),
    ({'M': (2, 2)}, 'differ in dimension'),
    ({'eta': -1.0}, '`eta` must be positive'),
    ({'sparsity': 'l2'}, '`sparsity`'),
    ({'init': 'waveletBank'}, 'needs a bank name'),
    ({'init': 'explicit'}, 'needs a filter bank'),
    ({'max_outer': 0}, '`max_outer`'),
    ({'channel_sampling': 2}, 'needs `channel_support`'),
])
def test_learn_config_validator_errors(change, fragment):
    success, errors = LearnConfigValidator({**VALID_CONFIG, **change})()
    assert success is False
    assert len(errors) == 1
    assert fragment in errors[0]
    assert errors[0].startswith('Invalid learning configuration')


def test_learn_config_validator_collects_every_error():
    success, errors = LearnConfigValidator({'m': -1, 'support': (), 'M': ()})()
    assert not success
    assert len(errors) == 3


def test_filter_bank_document():
    document = bank_document(haar())
    assert FilterBankDocument(document)() == (True, [])
    assert FilterBankDocument([1, 2])() == (False, ['Filter bank document must be a JSON object'])
    broken = dict(document, version=3, kind='wavelet')
    success, errors = FilterBankDocument(broken)()
    assert not success
    assert len(errors) == 2


def test_load_learn_config(tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({
        'm': 3,
        'support': [3],
        'samplingDiag': [2],
        'lambda': 0.2,
        'init': 'waveletBank:bspline-linear',
        'maxOuter': 50,
    }))
    status, config_data, msg = load_learn_config(path)
    assert status, msg
    assert msg.startswith('4010')
    assert config_data['processed'] == {
        'm': 3,
        'support': (3,),
        'M': (2,),
        'lam': 0.2,
        'init': 'waveletBank',
        'init_name': 'bspline-linear',
        'max_outer': 50,
    }
    assert config_data['raw']['lambda'] == 0.2


@pytest.mark.parametrize('text,code', [
    ('{"m": 2, "colour": "red"}', '4014'),
    ('{"m": 2,', '4012'),
    ('[2, 3]', '4013'),
    ('{"init": "zeros"}', '4015'),
])
def test_load_learn_config_errors(tmp_path, text, code):
    path = tmp_path / 'cfg.json'
    path.write_text(text)
    status, _, msg = load_learn_config(path)
    assert not status
    assert msg.startswith(code)


def test_load_learn_config_missing_file(tmp_path):
    status, config_data, msg = load_learn_config(tmp_path / 'missing.json', prefix=5000)
    assert not status
    assert config_data['raw'] is None
    assert msg.startswith('5011')


def test_stage_error_formatter():
    fmt = StageErrorFormatter('learn-frame')
    fmt.add_successful('load_config', 'cfg.json')
    fmt.add_successful('read_signals')
    msg = fmt.stage_error(InvalidLearnConfig('m'), '3003: Invalid learning configuration.')
    assert msg.splitlines() == [
        '3003: Invalid learning configuration.',
        'Command: learn-frame',
        'Completed stages: load_config, read_signals',
        'InvalidLearnConfig: Invalid learning configuration: m',
    ]
    fmt.store_stage_error(ValueError('x'), 'first')
    assert len(fmt.message_list) == 1
    carried = StageErrorFormatter('verify', fmt.successful_stages)
    assert len(carried.successful_stages) == 2
    assert 'Completed stages: none' in StageErrorFormatter('psnr').stage_error(OSError('gone'), 'e')


def test_check_template_data():
    template = JINJA_ENV.get_template('fileio/uep_report.json.j2')
    success, err = check_template_data({'time_residual': 0.0}, template)
    assert not success
    assert 'Key `passed` not found in template data.' in err
    assert 'time_residual' not in err


def test_parsers_and_format():
    assert parse_int_list('6,6') == (6, 6)
    assert parse_int_list('4,') == (4,)
    assert parse_float_list('0.1, 0.5') == [0.1, 0.5]
    assert format_g17(0.1) == '0.10000000000000001'
    assert float(format_g17(1 / 3)) == 1 / 3
