import pytest

from framerag.core import (
    FrameRecord,
    PipelineConfig,
    Query,
    ScoreStrategy,
    config_from_dict,
    config_from_json,
    config_to_json,
    load_config,
    validate_config,
)
from framerag.errors import BudgetOrderViolation, ConfigError, GroupCountTooLarge


class TestDefaults:
    def test_paper_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.n_candidates, cfg.m_prefilter, cfg.m_retrieve) == (256, 128, 64)
        assert (cfg.g_prefilter, cfg.g_retrieve) == (52, 26)
        assert cfg.score_strategy is ScoreStrategy.TWO_WORD
        assert cfg.n_views == 2

    def test_defaults_satisfy_invariants(self):
        assert validate_config(PipelineConfig()) == PipelineConfig()

    def test_empty_dict_yields_defaults(self):
        assert config_from_dict({}) == PipelineConfig()


class TestValidation:
    def test_stated_valid_example(self):
        cfg = config_from_dict(
            {"n_candidates": 256, "m_prefilter": 128, "m_retrieve": 64,
             "g_retrieve": 26, "g_prefilter": 52}
        )
        assert cfg.m_prefilter == 128

    def test_budget_order_violation(self):
        with pytest.raises(BudgetOrderViolation):
            config_from_dict({"n_candidates": 10, "m_prefilter": 20, "m_retrieve": 5,
                              "g_prefilter": 4, "g_retrieve": 2})

    def test_retrieve_above_prefilter(self):
        with pytest.raises(BudgetOrderViolation):
            validate_config(PipelineConfig(m_retrieve=200))

    def test_group_count_too_large(self):
        with pytest.raises(GroupCountTooLarge):
            validate_config(PipelineConfig(g_retrieve=65))
        with pytest.raises(GroupCountTooLarge):
            validate_config(PipelineConfig(g_prefilter=129))

    def test_nonpositive_values(self):
        with pytest.raises(ConfigError):
            validate_config(PipelineConfig(n_views=0))

    def test_bad_enum_string(self):
        with pytest.raises(ConfigError):
            config_from_dict({"score_strategy": "three_word"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            config_from_dict({"m_pre_filter": 128})
        with pytest.raises(ConfigError, match="unknown backends keys"):
            config_from_dict({"backends": {"clip_url": "mock://0"}})


class TestRoundTrip:
    def test_serialize_parse_serialize_is_byte_identical(self):
        first = config_to_json(PipelineConfig(seed=123, n_views=3))
        second = config_to_json(config_from_json(first))
        assert first == second

    def test_non_defaults_survive(self):
        cfg = PipelineConfig(m_retrieve=32, g_retrieve=13,
                             score_strategy=ScoreStrategy.ONE_WORD)
        assert config_from_json(config_to_json(cfg)) == cfg


class TestLoadConfig:
    def test_overrides_take_precedence(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(config_to_json(PipelineConfig(n_views=3)))
        cfg = load_config(path, {"n_views": 5, "seed": 9})
        assert (cfg.n_views, cfg.seed) == (5, 9)

    def test_none_path_gives_defaults(self):
        assert load_config(None) == PipelineConfig()

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, {"bogus": 1})


class TestDomainTypes:
    def test_frame_record_rejects_negative_index(self):
        with pytest.raises(ValueError):
            FrameRecord(index=-1, timestamp_s=0.0, content_ref="x.jpg")

    def test_query_requires_text(self):
        with pytest.raises(ValueError):
            Query(text="   ")

    def test_query_options_unique(self):
        with pytest.raises(ValueError):
            Query(text="q", options=("a", "a"))

    def test_frame_record_is_hashable_value(self):
        a = FrameRecord(index=0, timestamp_s=0.0, content_ref="x.jpg")
        b = FrameRecord(index=0, timestamp_s=0.0, content_ref="x.jpg")
        assert a == b and hash(a) == hash(b)
