"""Tests for caching, batch processing, configuration, paths and result files."""

import json
import os
import threading
import time

import numpy as np
import pytest

from polar_utils.nonbinary_polar.core.exceptions import CacheError, ConfigurationError
from polar_utils.nonbinary_polar.io.report_io import (
    ExperimentSpec, canonical_json, config_hash, load_frozen_set, load_spec_file, read_csv,
    read_csv_header, write_csv, write_json,
)
from polar_utils.nonbinary_polar.utils.batch_processor import BatchProcessor
from polar_utils.nonbinary_polar.utils.cache_manager import (
    Cache, array_fingerprint, cache_manager, cached, clear_all_caches,
)
from polar_utils.nonbinary_polar.utils.config_manager import DEFAULT_CONFIG, ConfigManager
from polar_utils.nonbinary_polar.utils.path_utils import normalize_path, resolve_output_path


class TestCache:

    def test_decorator_memoizes(self):
        calls = []

        @cached("test_memo", key_func=lambda x: f"sq:{x}")
        def square(x):
            calls.append(x)
            return x * x

        assert square(3) == 9 and square(3) == 9
        assert calls == [3]
        assert cache_manager.get_cache("test_memo").stats()["hits"] == 1

    def test_cached_arrays_are_read_only(self):
        @cached("test_arrays", key_func=lambda n: f"arange:{n}")
        def make(n):
            return np.arange(n)

        with pytest.raises(ValueError):
            make(4)[0] = 7

    def test_lru_eviction(self):
        cache = Cache("test_lru", max_size=2)
        cache.set("a", 1)
        time.sleep(0.01)
        cache.set("b", 2)
        time.sleep(0.01)
        cache.get("a")
        cache.set("c", 3)
        assert cache.get("b") is None
        assert cache.get("a") == 1 and cache.get("c") == 3

    def test_ttl_zero_never_expires(self):
        cache = Cache("test_ttl")
        cache.set("k", "v", ttl=0)
        cache.cleanup_expired()
        assert cache.get("k") == "v"

    def test_invalidate(self):
        @cached("test_invalidate", key_func=lambda x: f"item:{x}")
        def ident(x):
            return x

        ident(1), ident(2)
        assert cache_manager.get_cache("test_invalidate").invalidate(r"item:1") == 1
        with pytest.raises(CacheError):
            cache_manager.get_cache("test_invalidate").invalidate("(")

    def test_clear_all(self):
        @cached("test_clear", key_func=lambda: "only")
        def value():
            return object()

        first = value()
        clear_all_caches()
        assert value() is not first

    def test_fingerprint(self):
        a = np.arange(6).reshape(2, 3)
        assert array_fingerprint(a) == array_fingerprint(a.copy())
        assert array_fingerprint(a) != array_fingerprint(a.reshape(3, 2))
        assert array_fingerprint(a) != array_fingerprint(a.astype(float))


class TestBatchProcessor:

    def test_results_keep_input_order(self):
        processor = BatchProcessor(max_workers=4, show_progress=False)
        assert processor.process_items(list(range(50)), lambda x, offset: x + offset, offset=10) == list(range(10, 60))

    def test_strict_mode_reraises(self):
        def fail_on_three(x):
            if x == 3:
                raise ValueError("three")
            return x

        with pytest.raises(ValueError):
            BatchProcessor(max_workers=2, show_progress=False).process_items(list(range(6)), fail_on_three)
        lenient = BatchProcessor(max_workers=2, show_progress=False, strict=False)
        assert lenient.process_items(list(range(6)), fail_on_three) == [0, 1, 2, 4, 5]

    def test_uses_threads(self):
        processor = BatchProcessor(max_workers=2, batch_size=8, show_progress=False)
        names = processor.process_items(list(range(8)), lambda _: threading.current_thread().name)
        assert len(names) == 8

    def test_empty_input(self):
        assert BatchProcessor(show_progress=False).process_items([], lambda x: x) == []

    def test_rejects_non_callable(self):
        with pytest.raises(TypeError):
            BatchProcessor(show_progress=False).process_items([1], "not callable")


class TestConfigManager:

    def test_singleton(self):
        assert ConfigManager() is ConfigManager()

    def test_dotted_lookup(self, isolated_config):
        assert isolated_config.get_setting("search.max_exhaustive_q") == 8
        assert isolated_config.get_setting("search.missing", "fallback") == "fallback"
        assert isolated_config.get_tolerance("distance") == 1e-9
        assert isolated_config.get_polarization_window() == [0.05, 0.95]

    def test_update_persists(self, isolated_config, tmp_path):
        assert isolated_config.update_config({"simulation": {"design_snr_db": 3.5}})
        saved = json.loads((tmp_path / "polar.config.json").read_text())
        assert saved["simulation"]["design_snr_db"] == 3.5
        assert saved["simulation"]["trial_block"] == DEFAULT_CONFIG["simulation"]["trial_block"]

    def test_update_rejects_non_object(self, isolated_config):
        with pytest.raises(ConfigurationError):
            isolated_config.update_config(["not", "a", "dict"])

    def test_update_setting_rejects_unknown_key(self, isolated_config):
        assert not isolated_config.update_config_setting("search.unknown", 1)
        assert not isolated_config.update_config_setting("nosection.key", 1)

    def test_reload_fills_missing_sections(self, isolated_config, tmp_path):
        (tmp_path / "polar.config.json").write_text(json.dumps({"search": {"max_exhaustive_q": 6}}))
        isolated_config.reload()
        assert isolated_config.get_search_setting("max_exhaustive_q") == 6
        assert isolated_config.get_simulation_setting("trial_block") == 1000

    def test_reload_survives_corrupt_file(self, isolated_config, tmp_path):
        (tmp_path / "polar.config.json").write_text("{not json")
        isolated_config.reload()
        assert isolated_config.config == DEFAULT_CONFIG

    def test_output_dir(self, isolated_config, tmp_path):
        assert isolated_config.get_path("output_dir") == normalize_path(str(tmp_path / "results"))


class TestPaths:

    def test_normalize(self, tmp_path):
        assert normalize_path(str(tmp_path / "a" / ".." / "b" / "")) == normalize_path(str(tmp_path / "b"))
        assert normalize_path("") == ""

    def test_resolve_output_creates_parent(self, tmp_path):
        path = resolve_output_path("nested/dir/out.csv", str(tmp_path))
        assert path == normalize_path(str(tmp_path / "nested" / "dir" / "out.csv"))
        assert os.path.isdir(os.path.dirname(path))

    def test_resolve_absolute(self, tmp_path):
        target = str(tmp_path / "abs.json")
        assert resolve_output_path(target, "/somewhere/else") == normalize_path(target)


class TestReportIO:

    def test_hash_ignores_key_order_and_output(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        a = ExperimentSpec(command="simulate", q=5, N=8, output="x.csv")
        b = ExperimentSpec(command="simulate", q=5, N=8, output="y.csv")
        assert a.config_hash == b.config_hash
        assert a.config_hash != ExperimentSpec(command="simulate", q=5, N=8, seed=1).config_hash

    def test_unset_fields_are_omitted(self):
        spec = ExperimentSpec(command="bounds", kernel="L5a", extra={"snr_step": None, "objective": "spectrum"})
        assert spec.canonical() == {"command": "bounds", "kernel": "L5a", "seed": 0, "objective": "spectrum"}
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'

    def test_csv_round_trip(self, tmp_path):
        path = write_csv(str(tmp_path / "out" / "r.csv"), ["snr_db", "fer"], [(0.0, 0.25), (1.0, 0.125)],
                         "abc123", 7)
        assert read_csv_header(path) == {"config_hash": "abc123", "seed": "7"}
        rows = read_csv(path)
        assert [float(r["fer"]) for r in rows] == [0.25, 0.125]

    def test_json_carries_hash_and_seed(self, tmp_path):
        path = write_json(str(tmp_path / "r.json"), {"value": 1}, "abc123", 2)
        assert json.loads(open(path).read()) == {"value": 1, "config_hash": "abc123", "seed": 2}

    def test_spec_file_errors(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_spec_file(str(tmp_path / "missing.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2]")
        with pytest.raises(ConfigurationError):
            load_spec_file(str(bad))
        bad.write_text("{oops")
        with pytest.raises(ConfigurationError):
            load_spec_file(str(bad))

    def test_frozen_set_formats(self, tmp_path):
        listed = tmp_path / "list.json"
        listed.write_text("[3, 1]")
        wrapped = tmp_path / "code.json"
        wrapped.write_text(json.dumps({"frozen": [0, 2], "q": 5}))
        flagged = write_csv(str(tmp_path / "rel.csv"), ["index", "error_rate", "frozen"],
                            [(0, 0.5, 1), (1, 0.0, 0), (2, 0.4, 1)], "h", 0)
        plain = write_csv(str(tmp_path / "plain.csv"), ["index"], [(4,), (5,)], "h", 0)
        assert load_frozen_set(str(listed)) == frozenset({1, 3})
        assert load_frozen_set(str(wrapped)) == frozenset({0, 2})
        assert load_frozen_set(flagged) == frozenset({0, 2})
        assert load_frozen_set(plain) == frozenset({4, 5})

    def test_frozen_set_malformed(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"indices": [1]}))
        with pytest.raises(ConfigurationError):
            load_frozen_set(str(bad))
        with pytest.raises(ConfigurationError):
            load_frozen_set(str(tmp_path / "missing.csv"))
