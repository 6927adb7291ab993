import dataclasses

import numpy as np
import pytest

from src.tentwave.core.mesh1d import Material, SpatialMesh, TentType, cfl_admissible
from src.tentwave.core.tent_pitcher import pitch_mesh, pitch_slab, stack_slabs, uniform_stencil_mesh
from src.tentwave.errors import CFLViolationError, ConfigurationError, MeshingError, OrderingError
from src.tentwave.utils.constants import KIND_INTERIOR, KIND_LEFT, KIND_RIGHT


@pytest.fixture
def small_slab(unit_material):
    return pitch_slab(SpatialMesh.uniform(1.0, 4), unit_material, slab_height=0.1, margin=0.9, seed=3)


class TestPitchSlab:
    """Test the lowest-vertex-first slab mesher"""

    def test_all_tents_admissible(self, small_slab, unit_material):
        """Test every pitched tent passes the CFL check"""
        assert small_slab.n_tents > 0
        for tent in small_slab.tents():
            assert cfl_admissible(tent, unit_material, 0.9 + 1e-12)

    def test_final_front_flat(self, small_slab):
        """Test the slab ends on a flat front at its height"""
        front = small_slab.final_front()
        np.testing.assert_allclose(front.times, 0.1, rtol=0, atol=1e-14)
        assert small_slab.t_final == pytest.approx(0.1)

    def test_causal_order(self, small_slab):
        """Test inflow nodes are produced before the tent that uses them"""
        small_slab.check_causality()
        producer = np.full(small_slab.n_nodes, -1)
        producer[small_slab.apex_node] = np.arange(small_slab.n_tents)
        for i in range(small_slab.n_tents):
            for node in (small_slab.left_node[i], small_slab.bottom_node[i], small_slab.right_node[i]):
                if node >= 0:
                    assert producer[node] < i

    def test_tent_types_follow_position(self, small_slab):
        """Test boundary vertices get L and R tents, interior vertices type I"""
        last = small_slab.n_vertices - 1
        for tent in small_slab.tents():
            expected = {0: TentType.L, last: TentType.R}.get(tent.center_vertex, TentType.I)
            assert tent.tent_type == expected

    def test_single_interval_alternates_boundary_tents(self, unit_material):
        """Test a two vertex mesh only produces L and R tents"""
        slab = pitch_slab(SpatialMesh.uniform(1.0, 1), unit_material, slab_height=0.5, margin=0.9, seed=0)
        assert set(slab.kind.tolist()) <= {KIND_LEFT, KIND_RIGHT}
        assert slab.type_counts()["I"] == 0

    def test_same_seed_same_mesh(self, unit_material, coarse_mesh):
        """Test the tent sequence is reproducible for a fixed seed"""
        a = pitch_slab(coarse_mesh, unit_material, 0.2, seed=5)
        b = pitch_slab(coarse_mesh, unit_material, 0.2, seed=5)
        np.testing.assert_array_equal(a.center, b.center)
        np.testing.assert_array_equal(a.k, b.k)

    def test_defaults_come_from_settings(self, test_config, coarse_mesh, unit_material):
        """Test margin and seed default to the configured solver defaults"""
        implicit = pitch_slab(coarse_mesh, unit_material, 0.24)
        explicit = pitch_slab(coarse_mesh, unit_material, 0.24, margin=0.9, seed=7)
        np.testing.assert_array_equal(implicit.center, explicit.center)
        np.testing.assert_array_equal(implicit.k, explicit.k)

    def test_levels_group_independent_tents(self, small_slab):
        """Test no tent consumes the apex of a tent on its own level"""
        level_of_node = np.zeros(small_slab.n_nodes, dtype=int)
        level_of_node[small_slab.apex_node] = small_slab.level
        for group in small_slab.level_groups():
            level = small_slab.level[group[0]]
            for nodes in (small_slab.left_node, small_slab.bottom_node, small_slab.right_node):
                used = nodes[group]
                assert np.all(level_of_node[used[used >= 0]] < level)
        assert sum(len(g) for g in small_slab.level_groups()) == small_slab.n_tents

    def test_material_jump(self, interface_mesh, jump_material):
        """Test tents next to the interface respect the speed on each side"""
        slab = pitch_slab(interface_mesh, jump_material, slab_height=0.2, margin=0.95)
        for tent in slab.tents():
            assert cfl_admissible(tent, jump_material, 0.95 + 1e-12)

    def test_invalid_arguments(self, coarse_mesh, unit_material):
        """Test nonpositive slab heights and bad margins raise"""
        with pytest.raises(ConfigurationError):
            pitch_slab(coarse_mesh, unit_material, 0.0)
        with pytest.raises(ConfigurationError):
            pitch_slab(coarse_mesh, unit_material, 0.1, margin=0.0)

    def test_iteration_cap(self, coarse_mesh, unit_material):
        """Test the mesher gives up after the configured number of tents"""
        with pytest.raises(MeshingError, match="not reached"):
            pitch_slab(coarse_mesh, unit_material, 1.0, max_iterations=3)

    def test_tents_symmetric_with_leapfrog_slopes(self, coarse_mesh, unit_material):
        """Test slopes are 1 on the initial line, 1/2 inside the slab and 0 at its top"""
        slab = pitch_slab(coarse_mesh, unit_material, 1.0, margin=0.9, seed=2)
        interior = slab.kind == KIND_INTERIOR
        np.testing.assert_allclose(slab.p_l[interior], slab.p_r[interior], rtol=0, atol=1e-12)
        slopes = np.where(slab.kind == KIND_LEFT, slab.p_r, slab.p_l)
        assert np.all(np.isclose(slopes[:, None], [0.0, 0.5, 1.0], atol=1e-12).any(axis=1))
        np.testing.assert_allclose(slab.k.max(), 0.2)
        assert slab.n_levels == 11

    @pytest.mark.parametrize(
        "material", [Material.homogeneous(2.0), Material(kappa1=[0.5], kappa2=[0.5])], ids=["c2", "kappa_half"]
    )
    def test_fast_material_tents_admissible(self, material):
        """Test every stacked tent on a speed 2 material passes the CFL check at the requested margin"""
        tent_mesh = pitch_mesh(SpatialMesh.uniform(1.0, 20), material, 0.3, 0.1, margin=0.9, seed=4)
        assert tent_mesh.n_slabs == 3
        for tent in tent_mesh.tents():
            assert cfl_admissible(tent, material, 0.9)
        assert tent_mesh.cfl_ratios(material).max() <= 0.9

    def test_check_cfl_reports_first_violation(self, small_slab, unit_material):
        """Test a tent mesh checked against a tighter margin names the offending tent"""
        with pytest.raises(CFLViolationError) as info:
            small_slab.check_cfl(unit_material, 0.1)
        assert info.value.details["tent_index"] == 0


class TestTentMeshQueries:
    """Test derived tent mesh data"""

    def test_summary(self, small_slab):
        """Test the summary counts tents by type"""
        summary = small_slab.summary()
        assert summary["tents"] == small_slab.n_tents
        assert summary["type_i"] + summary["type_l"] + summary["type_r"] == small_slab.n_tents
        assert summary["triangles"] == 2 * summary["type_i"] + summary["type_l"] + summary["type_r"]
        assert summary["area"] == pytest.approx(0.1)
        assert 0.0 < summary["min_angle"] < np.pi / 2

    def test_to_document(self, small_slab):
        """Test the export lists tents in causal order"""
        document = small_slab.to_document()
        assert len(document["vertices"]) == small_slab.n_nodes
        assert [tent["order"] for tent in document["tents"]] == list(range(small_slab.n_tents))
        assert {tent["type"] for tent in document["tents"]} <= {"I", "L", "R"}

    def test_out_of_order_mesh_detected(self, small_slab):
        """Test a tent fed by a later apex raises OrderingError"""
        bottom = small_slab.bottom_node.copy()
        bottom[0] = small_slab.apex_node[1]
        broken = dataclasses.replace(small_slab, bottom_node=bottom)
        with pytest.raises(OrderingError) as info:
            broken.check_causality()
        assert info.value.tent_index == 0


class TestStackSlabs:
    """Test time translation of a slab"""

    def test_single_copy_is_identity(self, small_slab):
        """Test n_slabs = 1 returns the slab itself"""
        assert stack_slabs(small_slab, 1) is small_slab

    def test_counts_and_coverage(self, small_slab):
        """Test n copies hold n times the tents and reach n slab heights"""
        stacked = stack_slabs(small_slab, 3)
        assert stacked.n_tents == 3 * small_slab.n_tents
        assert stacked.t_final == pytest.approx(0.3)
        stacked.check_causality()

    def test_thin_slabs_cover_unit_time(self, coarse_mesh, unit_material):
        """Test slabs of height 0.002 stacked 500 times cover [0, 1]"""
        tent_mesh = pitch_mesh(coarse_mesh, unit_material, 1.0, 0.002)
        assert tent_mesh.n_slabs == 500
        assert tent_mesh.t_final == pytest.approx(1.0)

    def test_stacked_nodes_are_shared(self, small_slab):
        """Test the second slab starts on the top nodes of the first"""
        stacked = stack_slabs(small_slab, 2)
        m = small_slab.n_tents
        top = set(small_slab.final_front().top_nodes.tolist())
        inflow = stacked.bottom_node[m:]
        from_first_slab = set(inflow[inflow < stacked.n_vertices + m].tolist())
        assert from_first_slab
        assert from_first_slab <= top

    def test_invalid_count(self, small_slab):
        """Test at least one slab is required"""
        with pytest.raises(ConfigurationError):
            stack_slabs(small_slab, 0)


class TestUniformStencilMesh:
    """Test the alternating parity mesh on the h/2 lattice"""

    def test_interior_geometry(self):
        """Test interior tents after the first step have h/2 widths and slope 1/2"""
        h, k = 0.125, 0.1
        tent_mesh = uniform_stencil_mesh(1.0, h, k, 0.5)
        later = (tent_mesh.level > 1) & (tent_mesh.kind == KIND_INTERIOR)
        np.testing.assert_allclose(tent_mesh.h_l[later], h / 2)
        np.testing.assert_allclose(tent_mesh.p_l[later], 0.5)
        np.testing.assert_allclose(tent_mesh.p_r[later], 0.5)
        np.testing.assert_allclose(tent_mesh.k[later], k)

    def test_first_step_raises_even_points(self):
        """Test the first level lifts the even vertices by k/2 over the flat line"""
        tent_mesh = uniform_stencil_mesh(1.0, 0.125, 0.1, 0.5)
        first = tent_mesh.level == 1
        assert np.all(tent_mesh.center[first] % 2 == 0)
        np.testing.assert_allclose(tent_mesh.k[first], 0.05)

    def test_reaches_final_time(self):
        """Test the mesh covers the requested time"""
        tent_mesh = uniform_stencil_mesh(1.0, 0.125, 0.1, 0.5)
        assert tent_mesh.t_final >= 0.5 - 1e-12
        tent_mesh.check_causality()

    def test_every_tent_within_margin(self):
        """Test the largest ratio over all stencil tents equals a*c and stays below the margin"""
        tent_mesh = uniform_stencil_mesh(1.0, 0.125, 0.1, 0.5, margin=0.9)
        ratios = tent_mesh.cfl_ratios(Material.homogeneous())
        assert ratios.max() == pytest.approx(0.8)
        assert ratios.max() < 0.9

    def test_cfl_violation(self):
        """Test k >= h is rejected"""
        with pytest.raises(CFLViolationError):
            uniform_stencil_mesh(1.0, 0.125, 0.125, 0.5)

    def test_slow_material_allows_larger_step(self):
        """Test the bound uses the local wave speed"""
        material = Material(c=1.0, kappa1=[2.0], kappa2=[2.0])
        tent_mesh = uniform_stencil_mesh(1.0, 0.125, 0.2, 0.4, material)
        assert tent_mesh.n_tents > 0

    def test_step_must_divide_length(self):
        """Test h must fit the domain in half steps"""
        with pytest.raises(ConfigurationError):
            uniform_stencil_mesh(1.0, 0.3, 0.1, 0.5)
