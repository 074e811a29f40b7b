"""产物读写与运行清单"""

import json

import numpy as np
import pytest

from src.core.artifacts import ArtifactStore
from src.core.manifest import RunManifest
from src.core.spectral import build_grid
from src.utils.config import RunParameters
from src.utils.errors import AlignmentError, ConfigError, MissingArtifactError


def test_fields_survive_csv(tmp_path, rng):
    grid = build_grid(8)
    store = ArtifactStore(tmp_path)
    values = rng.normal(size=(3, 4, grid.size))
    store.write_fields('sgs_fields', grid, 0.01, values)
    np.testing.assert_array_equal(store.read_fields('sgs_fields', grid), values)


def test_fields_layout(tmp_path):
    grid = build_grid(2)
    store = ArtifactStore(tmp_path)
    store.write_fields('les_trajectories', grid, 0.5, np.arange(12.0).reshape(2, 2, 3))
    df = store.read_profile('les_trajectories')
    assert list(df.columns) == ['t', 'x', 'value', 'member']
    assert len(df) == 12
    assert df.iloc[4].tolist() == [0.5, 0.0, 4.0, 0]


def test_single_trajectory_without_member_column(tmp_path):
    grid = build_grid(4)
    store = ArtifactStore(tmp_path)
    values = np.ones((3, grid.size))
    store.write_fields('baseline_trajectory', grid, 0.1, values, with_member=False)
    assert 'member' not in store.read_profile('baseline_trajectory').columns
    assert store.read_fields('baseline_trajectory', grid, with_member=False).shape == (1, 3, 5)


def test_grid_mismatch(tmp_path):
    store = ArtifactStore(tmp_path)
    store.write_fields('raw_coarse', build_grid(8), 0.1, np.zeros((2, 3, 9)))
    with pytest.raises(AlignmentError):
        store.read_fields('raw_coarse', build_grid(4))


def test_missing_artifact_names_prerequisite(tmp_path):
    store = ArtifactStore(tmp_path)
    with pytest.raises(MissingArtifactError) as excinfo:
        store.read_json('drift')
    assert excinfo.value.prerequisite == 'calibrate'
    assert excinfo.value.exit_code == 3


def test_json_is_readable(tmp_path):
    store = ArtifactStore(tmp_path)
    store.write_json('summary', {'l2_time_avg': 0.25, '说明': '误差'})
    text = (tmp_path / 'summary.json').read_text(encoding='utf-8')
    assert '说明' in text
    assert store.read_json('summary')['l2_time_avg'] == 0.25
    assert store.existing() == ['summary']


class TestManifest:
    def test_record_and_reload(self, tmp_path):
        params = RunParameters(seed=9, out_dir=str(tmp_path))
        manifest = RunManifest()
        manifest.record('run-benchmark', params, {'sgs_fields': 'sgs_fields.csv'})
        path = tmp_path / 'manifest.json'
        manifest.save(path)

        loaded = RunManifest.load(path)
        assert loaded.parameters['seed'] == 9
        assert loaded.seeds['master'] == 9
        assert loaded.stages['run-benchmark']['members'] == params.members
        assert loaded.commands == ['run-benchmark']
        assert 'timestamp' not in json.loads(path.read_text(encoding='utf-8'))

    def test_identical_runs_give_identical_manifest(self, tmp_path):
        params = RunParameters()
        texts = []
        for name in ('a.json', 'b.json'):
            manifest = RunManifest()
            manifest.record('fbm-sample', params, {'fbm_paths': 'fbm_paths.csv'})
            manifest.save(tmp_path / name)
            texts.append((tmp_path / name).read_text(encoding='utf-8'))
        assert texts[0] == texts[1]

    def test_require_stage_detects_changed_parameters(self):
        manifest = RunManifest()
        manifest.record('run-benchmark', RunParameters(), {})
        manifest.require_stage('run-benchmark', RunParameters(hurst=0.6))
        with pytest.raises(ConfigError) as excinfo:
            manifest.require_stage('run-benchmark', RunParameters(delta=0.02))
        assert excinfo.value.key_path == 'filter.delta'

    def test_unrecorded_stage_is_not_checked(self):
        RunManifest().require_stage('calibrate', RunParameters())

    def test_load_or_create(self, tmp_path):
        manifest = RunManifest.load_or_create(tmp_path / 'manifest.json')
        assert manifest.commands == []
