from fractions import Fraction as F

from convineq.figures import FIGURE_NAMES, csv_text, figure_data, write_figures


def test_breakpoints_and_plateaus_are_exact():
    data = figure_data(F(2, 3), 1, 3)
    _, phi2 = data["fig2_phi2"]
    xs = {r[0] for r in phi2} | {r[1] for r in phi2}
    assert xs == {F(s) for s in (-5, -3, -1, 1, 3, 5)} | {F(-7, 3), F(7, 3)}
    _, conv = data["fig4_convolution"]
    assert {y for _, y in conv} == {0, 1, F(5, 3), 3}
    assert [x for x, _ in conv] == [F(v) for v in (-6, -4)] + [F(-10, 3), F(-4, 3), 0, F(4, 3), F(10, 3), 4, 6]
    _, rear = data["fig5_rearranged_convolution"]
    assert [x for x, _ in rear] == [F(v) for v in (-6, -4)] + [F(-8, 3), F(-2, 3), F(2, 3), F(8, 3), 4, 6]
    assert {y for _, y in rear} == {0, 1, 3}
    _, star = data["fig3_phi2_rearranged"]
    assert [r[0] for r in star] == [-5, F(-5, 3), F(5, 3)]


def test_csv_spelling():
    kind, rows = figure_data(F(2, 3), 1, 3)["fig4_convolution"]
    text = csv_text(kind, rows)
    assert text.splitlines()[0] == "x,y" and "-10/3,5/3" in text


def test_write_all(tmp_path):
    paths = write_figures(tmp_path, F(2, 3), 1, 3)
    assert {p.stem for p in paths} == set(FIGURE_NAMES)
    assert all(p.read_text() for p in paths)
    assert (tmp_path / "fig1_phi1.csv").read_text() == "x_left,x_right,value\n-1,1,1/2\n"
