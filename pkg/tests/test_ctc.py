import math

import numpy as np
import pytest

from gopkit import (
    BruteForceTooLarge,
    InfeasibleSequenceError,
    PosteriorMatrix,
    batched_perturbation_forward,
    ctc_brute_force,
    ctc_forward,
    ctc_viterbi_align,
    deletion_forward,
    masked_ctc_forward,
    minimal_frames,
)
from gopkit.ctc import ExtendedLabelSequence

from .support import (
    brute_force_best_path,
    brute_force_total,
    random_instance,
    random_matrix,
    small_inventory,
)


def one_hot_matrix(tokens, width, prob=1.0 - 1e-9):
    rows = []
    for tok in tokens:
        row = np.full(width, (1.0 - prob) / (width - 1))
        row[tok] = prob
        rows.append(row)
    return PosteriorMatrix(np.log(np.asarray(rows)))


class TestExtendedLabelSequence:
    def test_blank_interleaving(self):
        ext = ExtendedLabelSequence.build((1, 2, 2), blank=0)
        assert ext.tokens == (0, 1, 0, 2, 0, 2, 0)
        assert len(ext) == 7
        assert ext.tokens[::2] == (0, 0, 0, 0)

    def test_strip_blanks_recovers_sequence(self):
        ext = ExtendedLabelSequence.build((3, 1, 3), blank=0)
        assert ext.strip_blanks() == (3, 1, 3)

    def test_source_positions(self):
        ext = ExtendedLabelSequence.build((5, 7), blank=0)
        assert ext.source_positions == (-1, 0, -1, 1, -1)


class TestMinimalFrames:
    def test_distinct_sequence_needs_its_length(self):
        assert minimal_frames((1, 2, 3)) == 3

    def test_each_adjacent_repeat_needs_one_extra_frame(self):
        assert minimal_frames((1, 1)) == 3
        assert minimal_frames((2, 2, 2)) == 5
        assert minimal_frames((1, 1, 2, 2)) == 6

    def test_empty_sequence(self):
        assert minimal_frames(()) == 0


class TestForward:
    def test_single_frame_single_phoneme_certain(self):
        m = one_hot_matrix([1], width=2, prob=1.0 - 1e-12)
        res = ctc_forward(m, (1,))
        assert res.feasible
        assert abs(res.log_likelihood) < 1e-9

    def test_two_frame_uniform_closed_form(self):
        # paths aa, a-, -a out of four carry 0.25 each
        m = PosteriorMatrix(np.log(np.full((2, 2), 0.5)))
        res = ctc_forward(m, (1,))
        assert abs(res.log_likelihood - math.log(0.75)) < 1e-12

    def test_repeat_needs_separating_blank(self):
        # T=3, seq aa: only a-a has positive probability under these posteriors
        m = one_hot_matrix([1, 0, 1], width=2, prob=1.0 - 1e-9)
        res = ctc_forward(m, (1, 1))
        oracle = brute_force_total(m, (1, 1), blank=0)
        assert abs(res.log_likelihood - oracle) < 1e-9

    def test_infeasible_length_is_sentinel_not_error(self):
        rng = np.random.default_rng(0)
        m = random_matrix(rng, 2, 3)
        res = ctc_forward(m, (1, 2, 1))
        assert res.log_likelihood == -math.inf
        assert not res.feasible

    def test_loss_is_negated_log_likelihood(self):
        rng = np.random.default_rng(1)
        m = random_matrix(rng, 4, 3)
        res = ctc_forward(m, (1, 2))
        assert res.loss == -res.log_likelihood

    def test_empty_sequence_is_all_blank_mass(self):
        m = PosteriorMatrix(np.log(np.array([[0.7, 0.3], [0.6, 0.4]])))
        res = ctc_forward(m, ())
        assert abs(res.log_likelihood - math.log(0.7 * 0.6)) < 1e-12

    def test_alpha_table_kept_on_request(self):
        rng = np.random.default_rng(2)
        m = random_matrix(rng, 3, 3)
        assert ctc_forward(m, (1,)).alpha_table is None
        kept = ctc_forward(m, (1,), keep_alpha=True)
        assert kept.alpha_table.shape == (3, 3)

    def test_forward_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(60):
            inventory, matrix, ids = random_instance(rng)
            got = ctc_forward(matrix, ids, inventory=inventory).log_likelihood
            want = brute_force_total(matrix, ids, blank=0)
            if math.isinf(want):
                assert got == -math.inf
            else:
                assert abs(got - want) <= 1e-9
                checked += 1
        assert checked > 20

    def test_likelihood_nonpositive_for_normalized_rows(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            inventory, matrix, ids = random_instance(rng)
            res = ctc_forward(matrix, ids, inventory=inventory)
            assert res.log_likelihood <= 1e-12


class TestBruteForce:
    def test_agrees_with_forward(self):
        rng = np.random.default_rng(9)
        m = random_matrix(rng, 5, 4)
        got = ctc_brute_force(m, (1, 2))
        want = ctc_forward(m, (1, 2)).log_likelihood
        assert abs(got - want) < 1e-9

    def test_infeasible_gives_sentinel(self):
        rng = np.random.default_rng(9)
        m = random_matrix(rng, 1, 3)
        assert ctc_brute_force(m, (1, 2)) == -math.inf

    def test_guard_against_blowup(self):
        m = PosteriorMatrix(np.zeros((30, 10)))
        with pytest.raises(BruteForceTooLarge):
            ctc_brute_force(m, (1,))


class TestViterbi:
    def test_unique_path_segments(self):
        # frames spell blank, a, a, blank, b
        m = one_hot_matrix([0, 1, 1, 0, 2], width=3)
        alignment = ctc_viterbi_align(m, (1, 2))
        assert [(s.phoneme_id, s.start_frame, s.end_frame) for s in alignment] == [
            (1, 1, 3),
            (2, 4, 5),
        ]

    def test_best_path_matches_enumeration(self):
        rng = np.random.default_rng(17)
        compared = 0
        for _ in range(60):
            inventory, matrix, ids = random_instance(rng)
            want, _ = brute_force_best_path(matrix, ids, blank=0)
            if math.isinf(want):
                with pytest.raises(InfeasibleSequenceError):
                    ctc_viterbi_align(matrix, ids, inventory=inventory)
                continue
            alignment = ctc_viterbi_align(matrix, ids, inventory=inventory)
            assert abs(alignment.path_log_prob - want) <= 1e-9
            compared += 1
        assert compared > 20

    def test_path_probability_bounded_by_forward(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            inventory, matrix, ids = random_instance(rng)
            total = ctc_forward(matrix, ids, inventory=inventory).log_likelihood
            if math.isinf(total):
                continue
            alignment = ctc_viterbi_align(matrix, ids, inventory=inventory)
            assert alignment.path_log_prob <= total + 1e-12

    def test_segments_cover_sequence_in_order(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            inventory, matrix, ids = random_instance(rng)
            try:
                alignment = ctc_viterbi_align(matrix, ids, inventory=inventory)
            except InfeasibleSequenceError:
                continue
            segs = alignment.segments
            assert tuple(s.phoneme_id for s in segs) == tuple(ids)
            last_end = 0
            for seg in segs:
                assert seg.start_frame >= last_end
                assert seg.start_frame < seg.end_frame <= matrix.frame_count
                last_end = seg.end_frame

    def test_tie_prefers_earlier_emission_onset(self):
        # uniform posteriors tie every path; staying early wins
        m = PosteriorMatrix(np.log(np.full((2, 2), 0.5)))
        alignment = ctc_viterbi_align(m, (1,))
        seg = alignment.segments[0]
        assert (seg.start_frame, seg.end_frame) == (0, 2)

    def test_infeasible_raises(self):
        rng = np.random.default_rng(5)
        m = random_matrix(rng, 2, 2)
        with pytest.raises(InfeasibleSequenceError):
            ctc_viterbi_align(m, (1, 1))


class TestMaskedForward:
    def test_singleton_equals_explicit_substitution(self):
        rng = np.random.default_rng(19)
        for _ in range(30):
            inventory, matrix, ids = random_instance(rng, max_vocab=3, max_len=3)
            if inventory.size < 2:
                continue
            pos = int(rng.integers(len(ids)))
            others = [q for q in inventory.non_blank_ids() if q != ids[pos]]
            q = others[int(rng.integers(len(others)))]
            union = masked_ctc_forward(matrix, ids, pos, [q], inventory=inventory)
            variant = ids[:pos] + (q,) + ids[pos + 1 :]
            direct = ctc_forward(matrix, variant, inventory=inventory)
            if math.isinf(direct.log_likelihood):
                assert union.log_likelihood == -math.inf
            else:
                assert abs(union.log_likelihood - direct.log_likelihood) <= 1e-9

    def test_pair_equals_log_sum_exp_of_singles(self):
        rng = np.random.default_rng(29)
        inventory = small_inventory(4)
        for _ in range(25):
            matrix = random_matrix(rng, int(rng.integers(2, 6)), inventory.width)
            ids = tuple(int(q) for q in rng.integers(1, 5, size=2))
            pos = int(rng.integers(2))
            qs = [q for q in inventory.non_blank_ids() if q != ids[pos]][:2]
            union = masked_ctc_forward(matrix, ids, pos, qs, inventory=inventory)
            singles = [
                ctc_forward(matrix, ids[:pos] + (q,) + ids[pos + 1 :], inventory=inventory).log_likelihood
                for q in qs
            ]
            want = np.logaddexp(singles[0], singles[1])
            assert abs(union.log_likelihood - want) <= 1e-9

    def test_union_additive_over_disjoint_sets(self):
        rng = np.random.default_rng(37)
        inventory = small_inventory(5)
        matrix = random_matrix(rng, 6, inventory.width)
        ids = (2, 4, 1)
        part_a = masked_ctc_forward(matrix, ids, 1, [1, 2], inventory=inventory)
        part_b = masked_ctc_forward(matrix, ids, 1, [3, 5], inventory=inventory)
        whole = masked_ctc_forward(matrix, ids, 1, [1, 2, 3, 5], inventory=inventory)
        want = np.logaddexp(part_a.log_likelihood, part_b.log_likelihood)
        assert abs(whole.log_likelihood - want) <= 1e-9

    def test_substitute_equal_to_neighbor_stays_exact(self):
        # q equals the right neighbor, so the perturbed sequence has an
        # adjacent repeat and the repeat rule must stay per-substitute
        rng = np.random.default_rng(41)
        inventory = small_inventory(3)
        for frames in (2, 3, 4, 5):
            matrix = random_matrix(rng, frames, inventory.width)
            ids = (1, 2)
            union = masked_ctc_forward(matrix, ids, 0, [2, 3], inventory=inventory)
            direct = [
                ctc_forward(matrix, (2, 2), inventory=inventory).log_likelihood,
                ctc_forward(matrix, (3, 2), inventory=inventory).log_likelihood,
            ]
            want = np.logaddexp(direct[0], direct[1])
            if math.isinf(want):
                assert union.log_likelihood == -math.inf
            else:
                assert abs(union.log_likelihood - want) <= 1e-9

    def test_first_and_last_position_unions(self):
        rng = np.random.default_rng(43)
        inventory = small_inventory(4)
        matrix = random_matrix(rng, 5, inventory.width)
        ids = (1, 2, 3)
        for pos in (0, len(ids) - 1):
            allowed = [q for q in inventory.non_blank_ids() if q != ids[pos]]
            union = masked_ctc_forward(matrix, ids, pos, allowed, inventory=inventory)
            parts = [
                ctc_forward(matrix, ids[:pos] + (q,) + ids[pos + 1 :], inventory=inventory).log_likelihood
                for q in allowed
            ]
            want = np.logaddexp.reduce(parts)
            assert abs(union.log_likelihood - want) <= 1e-9

    def test_empty_allowed_set_rejected(self):
        rng = np.random.default_rng(4)
        m = random_matrix(rng, 3, 3)
        with pytest.raises(ValueError):
            masked_ctc_forward(m, (1,), 0, [])

    def test_original_phoneme_rejected_as_substitute(self):
        rng = np.random.default_rng(4)
        m = random_matrix(rng, 3, 3)
        with pytest.raises(ValueError):
            masked_ctc_forward(m, (1, 2), 0, [1, 2])

    def test_blank_rejected_as_substitute(self):
        rng = np.random.default_rng(4)
        m = random_matrix(rng, 3, 3)
        with pytest.raises(ValueError):
            masked_ctc_forward(m, (1,), 0, [0, 2])

    def test_position_out_of_range(self):
        rng = np.random.default_rng(4)
        m = random_matrix(rng, 3, 3)
        with pytest.raises(IndexError):
            masked_ctc_forward(m, (1,), 1, [2])


class TestDeletionForward:
    def test_matches_shortened_sequence(self):
        rng = np.random.default_rng(47)
        for _ in range(25):
            inventory, matrix, ids = random_instance(rng)
            if len(ids) < 2:
                continue
            pos = int(rng.integers(len(ids)))
            got = deletion_forward(matrix, ids, pos, inventory=inventory)
            want = brute_force_total(matrix, ids[:pos] + ids[pos + 1 :], blank=0)
            if math.isinf(want):
                assert got.log_likelihood == -math.inf
            else:
                assert abs(got.log_likelihood - want) <= 1e-9

    def test_last_phoneme_deletion_gives_blank_product(self):
        m = PosteriorMatrix(np.log(np.array([[0.5, 0.5], [0.5, 0.5]])))
        res = deletion_forward(m, (1,), 0)
        assert abs(res.log_likelihood - math.log(0.25)) < 1e-12


class TestBatchedForward:
    def _all_perturbations(self, ids, vocab_size):
        out = []
        for pos in range(len(ids)):
            for q in range(1, vocab_size + 1):
                if q == ids[pos]:
                    continue
                out.append((pos, ids[:pos] + (q,) + ids[pos + 1 :]))
            out.append((pos, ids[:pos] + ids[pos + 1 :]))
        return out

    def test_matches_independent_forwards(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            inventory, matrix, ids = random_instance(rng, max_frames=6, max_vocab=3, max_len=3)
            perturbations = self._all_perturbations(ids, inventory.size)
            batch = batched_perturbation_forward(matrix, ids, perturbations, inventory=inventory)
            for (pos, variant), got in zip(perturbations, batch.log_likelihoods):
                want = ctc_forward(matrix, variant, inventory=inventory).log_likelihood
                if math.isinf(want):
                    assert got == -math.inf
                else:
                    assert abs(got - want) <= 1e-9

    def test_cached_equals_naive(self):
        rng = np.random.default_rng(59)
        for _ in range(15):
            inventory, matrix, ids = random_instance(rng, max_frames=6, max_vocab=3, max_len=3)
            perturbations = self._all_perturbations(ids, inventory.size)
            cached = batched_perturbation_forward(
                matrix, ids, perturbations, inventory=inventory, use_cache=True
            )
            naive = batched_perturbation_forward(
                matrix, ids, perturbations, inventory=inventory, use_cache=False
            )
            a, b = cached.log_likelihoods, naive.log_likelihoods
            with np.errstate(invalid="ignore"):
                same = (a == b) | (np.abs(a - b) <= 1e-9)
            assert same.all()

    def test_cached_touches_fewer_cells(self):
        rng = np.random.default_rng(61)
        inventory, matrix, ids = random_instance(rng, max_frames=6, max_vocab=3, max_len=3)
        while len(ids) < 2:
            inventory, matrix, ids = random_instance(rng, max_frames=6, max_vocab=3, max_len=3)
        perturbations = self._all_perturbations(ids, inventory.size)
        cached = batched_perturbation_forward(matrix, ids, perturbations, inventory=inventory)
        naive = batched_perturbation_forward(
            matrix, ids, perturbations, inventory=inventory, use_cache=False
        )
        for (pos, _), c_cells, n_cells in zip(
            perturbations, cached.cells_per_perturbation, naive.cells_per_perturbation
        ):
            assert c_cells <= n_cells
            if pos >= 1:
                assert c_cells < n_cells

    def test_empty_perturbation_list(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 3, 3)
        batch = batched_perturbation_forward(m, (1,), [])
        assert batch.log_likelihoods.size == 0
        assert math.isfinite(batch.original_log_likelihood)

    def test_multi_position_edit_rejected(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 4, 4)
        with pytest.raises(ValueError):
            batched_perturbation_forward(m, (1, 2), [(0, (3, 3))])

    def test_unchanged_variant_rejected(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 4, 4)
        with pytest.raises(ValueError):
            batched_perturbation_forward(m, (1, 2), [(0, (1, 2))])

    def test_deletion_of_last_position_costs_no_new_cells(self):
        rng = np.random.default_rng(67)
        m = random_matrix(rng, 5, 4)
        ids = (1, 2, 3)
        batch = batched_perturbation_forward(m, ids, [(2, (1, 2))])
        assert batch.cells_per_perturbation[0] == 0
        want = ctc_forward(m, (1, 2)).log_likelihood
        assert abs(batch.log_likelihoods[0] - want) <= 1e-12
