import pytest

from xy_correlators.utils import StageTimer, parse_range, safe_read_file, safe_write_file


class TestParseRange:
    def test_integer_range(self):
        assert parse_range('1..4') == [1, 2, 3, 4]
        assert parse_range('3..1') == [3, 2, 1]

    def test_linear_points(self):
        assert parse_range('0..1:5') == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_log_points(self):
        assert parse_range('1e-3..1e-1:3log') == pytest.approx([1e-3, 1e-2, 1e-1])

    def test_lists_and_scalars(self):
        assert parse_range('1, 2,5') == [1, 2, 5]
        assert parse_range('0.5,1.5') == [0.5, 1.5]
        assert parse_range(0.25) == [0.25]
        assert parse_range([1, 2]) == [1.0, 2.0]

    @pytest.mark.parametrize("text", ['', '0.5..2', '-1..1:3log', 'a,b'])
    def test_rejected(self, text):
        with pytest.raises(ValueError):
            parse_range(text)


def test_atomic_write_leaves_no_temporary(tmp_path):
    target = tmp_path / 'table.csv'
    safe_write_file(target, 'a,b\n1,2\n')
    safe_write_file(target, 'a,b\n3,4\n')
    assert safe_read_file(target) == 'a,b\n3,4\n'
    assert [path.name for path in tmp_path.iterdir()] == ['table.csv']


def test_write_into_missing_folder_fails(tmp_path):
    with pytest.raises(IOError):
        safe_write_file(tmp_path / 'missing' / 'table.csv', 'x')


def test_stage_timer_measures_block():
    with StageTimer('sweep') as timer:
        sum(range(1000))
    assert timer.duration_seconds >= 0.0
    assert timer.duration_rounded == round(timer.duration_seconds, 2)
