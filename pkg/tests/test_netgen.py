import io

import numpy as np
import pytest

from qmcpress import netgen
from qmcpress.netgen import (
    BUNDLED_DIRECTION_TEXT,
    DigitalNet,
    DimensionCapacityError,
    DirectionParseError,
    TValueBudgetError,
    active_table,
    build_matrices,
    bundled_table,
    default_nu,
    export_net,
    generate_net,
    import_net,
    interlace,
    interlacing_t_bound,
    load_direction_numbers,
    matrix_rank_t,
    minimal_t,
    pair_t_first_occurrences,
    schedule_m,
    sobol_net,
    verified_net,
    worst_pair_projection_t,
)


def test_parse_minimal_table():
    table = load_direction_numbers(io.StringIO("d s a m_i\n2 1 0 1\n"))
    assert table.max_dimension == 2
    entry = table.entry(2)
    assert (entry.degree, entry.a, entry.m_init) == (1, 0, (1,))


def test_parse_errors():
    with pytest.raises(DirectionParseError):
        load_direction_numbers(io.StringIO(""))
    with pytest.raises(DirectionParseError, match="line 2"):
        load_direction_numbers(io.StringIO("header\n2 1 zero 1\n"))
    with pytest.raises(DirectionParseError):
        load_direction_numbers(io.StringIO("header\n2 1 0 1 3\n"))
    with pytest.raises(DirectionParseError):
        load_direction_numbers(io.StringIO("header\nonly-header-no-data"))


def test_capacity_error():
    table = bundled_table()
    assert table.max_dimension == 32
    with pytest.raises(DimensionCapacityError):
        table.entry(33)
    with pytest.raises(DimensionCapacityError):
        build_matrices(table, 33, 4)


def test_direction_file_env(tmp_path, monkeypatch):
    path = tmp_path / "dirs.txt"
    path.write_text("d s a m_i\n2 1 0 1\n")
    monkeypatch.setenv("QMC_DIRECTION_FILE", str(path))
    assert active_table().max_dimension == 2
    monkeypatch.delenv("QMC_DIRECTION_FILE")
    assert active_table().max_dimension == 32


def test_first_dimension_is_identity():
    mats = build_matrices(bundled_table(), 1, 3)
    assert np.array_equal(mats.matrices[0], np.eye(3, dtype=np.uint8))


def test_van_der_corput_order():
    # identity matrix, m=2: points 0, 0.5, 0.25, 0.75 in index order
    mats = netgen.GeneratingMatrices(
        base=2, m=2, s=1, matrices=np.eye(2, dtype=np.uint8)[None, :, :]
    )
    net = generate_net(mats)
    assert np.allclose(net.points().ravel(), [0.0, 0.5, 0.25, 0.75])


def test_point_zero_is_origin():
    net = sobol_net(5, 4)
    assert not net.point_ints[0].any()


def test_fig1_net_is_0_2_2():
    # s=2, m=2 Sobol: every row, column, and quadrant holds exactly one point
    net = sobol_net(2, 2)
    pts = net.points()
    for d in [(2, 0), (0, 2), (1, 1)]:
        cells = {(int(x * 2 ** d[0]), int(y * 2 ** d[1])) for x, y in pts}
        assert len(cells) == 4
    assert minimal_t(net) == 0


def test_sobol_points_distinct():
    # all b^m points distinct per coordinate set; m up to 16, s up to 10
    for s, m in [(10, 12), (10, 16), (3, 16)]:
        net = sobol_net(s, m)
        seen = {tuple(row) for row in net.point_ints}
        assert len(seen) == net.n_points


def test_net_linearity_group_structure():
    # digit-wise XOR of two net points is another net point (m <= 8)
    for s, m in [(2, 6), (3, 8)]:
        net = sobol_net(s, m)
        pool = {tuple(row) for row in net.point_ints}
        rng = np.random.default_rng(9)
        idx = rng.integers(0, net.n_points, size=(50, 2))
        for a, b in idx:
            combo = tuple(net.point_ints[a] ^ net.point_ints[b])
            assert combo in pool


def test_minimal_t_table1_m10():
    assert minimal_t(sobol_net(2, 10)) == 0
    assert minimal_t(sobol_net(3, 10)) == 1
    assert minimal_t(sobol_net(4, 10)) == 2
    assert minimal_t(sobol_net(5, 10)) == 3


def test_minimal_t_regular_grid():
    # {(i/2, j/2)}: the column [1/4,1/2) x [0,1) is empty, so t=0 fails
    pts = np.array([[i, j] for i in (0, 2) for j in (0, 2)], dtype=np.int64)
    net = DigitalNet(base=2, m=2, s=2, depth=2, point_ints=pts)
    assert minimal_t(net) == 1


def test_minimal_t_matches_rank_check():
    for s, m in [(2, 6), (3, 7), (4, 8), (5, 8)]:
        mats = build_matrices(bundled_table(), s, m)
        assert minimal_t(generate_net(mats)) == matrix_rank_t(mats)


def test_minimal_t_budget_guard():
    with pytest.raises(TValueBudgetError):
        minimal_t(sobol_net(6, 12), budget=1000)


def test_verified_net_sets_t(verified_nets):
    net = verified_nets(2, 4)
    assert net.t_declared == 0


def test_interlace_identity_and_example():
    net = sobol_net(2, 4)
    assert interlace(net, 1) is net
    pts = np.array([[0, 0], [2, 1], [1, 2], [3, 3]], dtype=np.int64)
    tiny = DigitalNet(base=2, m=2, s=2, depth=2, point_ints=pts)
    out = interlace(tiny, 2)
    assert out.s == 1 and out.depth == 4
    assert out.points()[1, 0] == 0.5625  # digits 1,0 and 0,1 interleave to 1001
    with pytest.raises(ValueError):
        interlace(sobol_net(3, 3), 2)


def test_interlacing_bound_alpha2():
    # t_alpha <= alpha t + alpha floor(s(alpha-1)/2) for s <= 2, m <= 8
    for s in (1, 2):
        for m in (4, 6, 8):
            base = verified_net(sobol_net(2 * s, m))
            inter = interlace(base, 2)
            bound = interlacing_t_bound(base.t_declared, s, 2)
            assert inter.t_upper_bound == bound
            assert minimal_t(inter) <= bound


def test_published_pair_projection_table():
    # the published quality table tracks the worst 2D-projection t-value;
    # reproduce both rows' first-occurrence dimensions exactly
    table = bundled_table()
    firsts_10 = pair_t_first_occurrences(table, 10, 32)
    assert firsts_10[0] == 2 and firsts_10[1] == 3 and firsts_10[2] == 4
    assert firsts_10[3] == 5 and firsts_10[4] == 9 and firsts_10[5] == 16
    assert firsts_10[6] == 32
    firsts_12 = pair_t_first_occurrences(table, 12, 32)
    assert firsts_12[0] == 2 and firsts_12[1] == 3 and firsts_12[2] == 4
    assert firsts_12[3] == 6 and firsts_12[4] == 10 and firsts_12[5] == 16
    assert worst_pair_projection_t(table, 4, 12) == 2
    assert worst_pair_projection_t(table, 6, 12) == 3


def test_default_nu_and_schedule():
    assert default_nu(12, 1, 0) == 6
    assert default_nu(12, 2, 0) == 8
    assert default_nu(12, 2, 6) == 6  # clipped to m - t
    assert schedule_m(5, 1) == 14
    assert schedule_m(5, 2) == 12


def test_export_import_roundtrip(tmp_path):
    net = verified_net(sobol_net(3, 5))
    csv = tmp_path / "net.csv"
    export_net(net, str(csv))
    again = import_net(str(csv))
    assert np.array_equal(net.point_ints, again.point_ints)
    assert (again.base, again.m, again.s, again.t_declared) == (2, 5, 3, net.t_declared)
    header = csv.read_text().splitlines()[0]
    assert header == "l,z_1,z_2,z_3"


def test_bundled_table_text_is_wellformed():
    # the embedded excerpt parses through the same production parser
    table = load_direction_numbers(io.StringIO(BUNDLED_DIRECTION_TEXT))
    assert table.max_dimension == 32
