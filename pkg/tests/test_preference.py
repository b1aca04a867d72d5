import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspect_cluster import (
    Corpus,
    DpoConfig,
    MissingPredictionsError,
    PreferenceExample,
    PreferenceSkeleton,
    build_preference_set,
    dpo_grad,
    dpo_loss,
    format_cats,
    sigmoid,
    write_preference_jsonl,
)

from conftest import make_comment


def example(lp_pref, lr_pref=0.0, lp_rej=0.0, lr_rej=0.0, cid="c0"):
    return PreferenceExample(
        context_id=cid,
        logp_policy_preferred=lp_pref,
        logp_ref_preferred=lr_pref,
        logp_policy_rejected=lp_rej,
        logp_ref_rejected=lr_rej,
    )


class TestSigmoid:
    def test_known_values(self):
        assert sigmoid(0.0) == 0.5
        assert sigmoid(2.0) == pytest.approx(0.8807970779778823, abs=1e-15)
        assert sigmoid(-2.0) == pytest.approx(1.0 - 0.8807970779778823, abs=1e-15)

    def test_extreme_arguments_stay_finite(self):
        assert sigmoid(1000.0) == 1.0
        assert sigmoid(-1000.0) == 0.0
        assert 0.0 < sigmoid(-30.0) < 1e-12


class TestValidation:
    def test_positive_logp_rejected(self):
        with pytest.raises(ValueError, match="logp_policy_preferred"):
            example(0.5)

    def test_infinite_logp_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            example(-math.inf)

    def test_nan_logp_rejected(self):
        with pytest.raises(ValueError):
            example(float("nan"))

    def test_zero_logp_allowed(self):
        assert example(0.0).logp_policy_preferred == 0.0

    @pytest.mark.parametrize("beta", [0.0, -0.1, math.inf, float("nan")])
    def test_bad_beta_rejected(self, beta):
        with pytest.raises(ValueError):
            DpoConfig(beta=beta)

    def test_default_beta(self):
        assert DpoConfig().beta == 0.1


class TestLoss:
    def test_zero_ratios_give_ln2(self):
        batch = [example(-3.0, -3.0, -7.0, -7.0)]
        for beta in (0.05, 0.1, 0.5, 1.0):
            assert dpo_loss(batch, DpoConfig(beta=beta)) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_unit_margin(self):
        # d_pref - d_rej = 1 with beta = 1: loss is -log sigmoid(1).
        batch = [example(-1.0, -2.0, -5.0, -5.0)]
        assert dpo_loss(batch, DpoConfig(beta=1.0)) == pytest.approx(0.31326168751822286, abs=1e-15)

    def test_batch_is_mean_of_singletons(self):
        rng = random.Random(0)
        batch = [
            example(*(rng.uniform(-20.0, 0.0) for _ in range(4)), cid=f"c{k}") for k in range(7)
        ]
        per_example = [dpo_loss([ex]) for ex in batch]
        assert dpo_loss(batch) == pytest.approx(sum(per_example) / len(batch), abs=1e-12)

    def test_decreasing_in_margin(self):
        widening = [dpo_loss([example(-1.0, -1.0 - m, -1.0 - m, -1.0)], DpoConfig(beta=0.5)) for m in (0.0, 0.5, 1.0, 2.0)]
        assert widening == sorted(widening, reverse=True)
        assert all(v > 0.0 for v in widening)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            dpo_loss([])
        with pytest.raises(ValueError):
            dpo_grad([])

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(*(st.floats(min_value=-30.0, max_value=0.0) for _ in range(4))),
            min_size=1,
            max_size=8,
        ),
        st.floats(min_value=-5.0, max_value=0.0),
    )
    def test_shift_invariance(self, rows, shift):
        """Adding a constant to both policy and reference log-probs of the
        same completion leaves the loss untouched."""
        batch = [example(*row, cid=f"c{k}") for k, row in enumerate(rows)]
        shifted = [
            example(
                row[0] + shift, row[1] + shift, row[2] + shift, row[3] + shift, cid=f"c{k}"
            )
            for k, row in enumerate(rows)
        ]
        assert dpo_loss(shifted) == pytest.approx(dpo_loss(batch), abs=1e-12)


def _numeric_grad(ex: PreferenceExample, cfg: DpoConfig, field: str, h: float = 1e-6) -> float:
    def at(delta: float) -> float:
        values = {
            "logp_policy_preferred": ex.logp_policy_preferred,
            "logp_ref_preferred": ex.logp_ref_preferred,
            "logp_policy_rejected": ex.logp_policy_rejected,
            "logp_ref_rejected": ex.logp_ref_rejected,
        }
        values[field] = values[field] + delta
        return dpo_loss([PreferenceExample(context_id=ex.context_id, **values)], cfg)

    return (at(h) - at(-h)) / (2.0 * h)


class TestGrad:
    def test_signs_and_negation(self):
        batch = [example(-2.0, -3.0, -1.0, -4.0), example(-9.0, -1.0, -2.0, -2.0, cid="c1")]
        for g_pref, g_rej in dpo_grad(batch, DpoConfig(beta=0.7)):
            assert g_pref <= 0.0
            assert g_rej >= 0.0
            assert g_pref == -g_rej

    def test_zero_ratio_point(self):
        # s = 1/2 there, so each entry is beta/2 in magnitude (N = 1).
        (g_pref, g_rej), = dpo_grad([example(-1.0, -1.0, -1.0, -1.0)], DpoConfig(beta=1.0))
        assert g_pref == pytest.approx(-0.5, abs=1e-15)
        assert g_rej == pytest.approx(0.5, abs=1e-15)

    def test_batch_averaging(self):
        ex = example(-2.0, -3.0, -1.0, -4.0)
        (single_pref, _), = dpo_grad([ex])
        doubled = dpo_grad([ex, example(-2.0, -3.0, -1.0, -4.0, cid="c1")])
        assert doubled[0][0] == pytest.approx(single_pref / 2.0, abs=1e-15)

    def test_matches_central_differences(self):
        rng = random.Random(17)
        for trial in range(60):
            cfg = DpoConfig(beta=rng.choice([0.05, 0.1, 0.5, 1.0]))
            ex = example(*(rng.uniform(-20.0, -0.5) for _ in range(4)), cid=f"t{trial}")
            (g_pref, g_rej), = dpo_grad([ex], cfg)
            num_pref = _numeric_grad(ex, cfg, "logp_policy_preferred")
            num_rej = _numeric_grad(ex, cfg, "logp_policy_rejected")
            assert g_pref == pytest.approx(num_pref, rel=1e-5, abs=1e-9)
            assert g_rej == pytest.approx(num_rej, rel=1e-5, abs=1e-9)

    def test_beta_scales_gradients_at_fixed_sigmoid(self):
        # At zero logit the sigmoid is 1/2 independent of beta, so gradient
        # magnitude is exactly beta/2.
        for beta in (0.05, 0.1, 0.5, 2.0):
            (g_pref, _), = dpo_grad([example(-4.0, -4.0, -6.0, -6.0)], DpoConfig(beta=beta))
            assert g_pref == pytest.approx(-beta / 2.0, abs=1e-15)


class TestFormatCats:
    def test_joins_in_order(self):
        assert format_cats(("economy", "tax hike")) == "economy, tax hike"

    def test_empty_is_na(self):
        assert format_cats(()) == "NA"


class TestBuildPreferenceSet:
    def _corpora(self):
        human = Corpus(
            name="human",
            comments=(
                make_comment(0, gold_cats=("economy",)),
                make_comment(1, gold_cats=("health", "masks")),
                make_comment(2, gold_cats=()),
            ),
        )
        machine = Corpus(
            name="machine",
            comments=(
                make_comment(0, gold_cats=("economy",), pred_cats=("economy",)),
                make_comment(1, gold_cats=("health", "masks"), pred_cats=("health",)),
                make_comment(2, gold_cats=(), pred_cats=("noise",)),
            ),
        )
        return human, machine

    def test_pairs_and_skips(self):
        human, machine = self._corpora()
        skeletons, skipped = build_preference_set(human, machine, prompt_builder=lambda c: f"P:{c.id}")
        assert skipped == 1
        assert [s.id for s in skeletons] == ["c0001", "c0002"]
        assert skeletons[0] == PreferenceSkeleton(
            id="c0001", prompt="P:c0001", chosen="health, masks", rejected="health"
        )
        assert skeletons[1].chosen == "NA"
        assert skeletons[1].rejected == "noise"

    def test_identical_corpora_yield_nothing(self):
        human, _ = self._corpora()
        machine = Corpus(
            name="m",
            comments=tuple(
                make_comment(i, gold_cats=c.gold_cats, pred_cats=c.gold_cats)
                for i, c in enumerate(human)
            ),
        )
        skeletons, skipped = build_preference_set(human, machine, prompt_builder=lambda c: "p")
        assert skeletons == []
        assert skipped == len(human)

    def test_set_comparison_ignores_order(self):
        human = Corpus(name="h", comments=(make_comment(0, gold_cats=("a", "b")),))
        machine = Corpus(name="m", comments=(make_comment(0, pred_cats=("b", "a")),))
        skeletons, skipped = build_preference_set(human, machine, prompt_builder=lambda c: "p")
        assert (skeletons, skipped) == ([], 1)

    def test_id_mismatch_rejected(self):
        human, _ = self._corpora()
        machine = Corpus(name="m", comments=(make_comment(9, pred_cats=("x",)),))
        with pytest.raises(ValueError, match="same comment ids"):
            build_preference_set(human, machine, prompt_builder=lambda c: "p")

    def test_machine_without_predictions_rejected(self):
        human, _ = self._corpora()
        machine = Corpus(
            name="m", comments=tuple(make_comment(i, pred_cats=None) for i in range(3))
        )
        with pytest.raises(MissingPredictionsError):
            build_preference_set(human, machine, prompt_builder=lambda c: "p")

    def test_default_prompt_builder_renders_instruction(self):
        human = Corpus(name="h", comments=(make_comment(0, gold_cats=("economy",)),))
        machine = Corpus(name="m", comments=(make_comment(0, pred_cats=("noise",)),))
        skeletons, _ = build_preference_set(human, machine)
        assert "Annotate the aspect terms of the following comment:" in skeletons[0].prompt
        assert human.comments[0].text in skeletons[0].prompt


class TestWriteJsonl:
    def test_round_trip_shape(self, tmp_path):
        skeletons = [
            PreferenceSkeleton(id="a", prompt="p1", chosen="x, y", rejected="NA"),
            PreferenceSkeleton(id="b", prompt="p2", chosen="NA", rejected="z"),
        ]
        out = tmp_path / "prefs.jsonl"
        write_preference_jsonl(skeletons, out)
        lines = out.read_text(encoding="utf-8").splitlines()
        assert [json.loads(l) for l in lines] == [
            {"id": "a", "prompt": "p1", "chosen": "x, y", "rejected": "NA"},
            {"id": "b", "prompt": "p2", "chosen": "NA", "rejected": "z"},
        ]
