import json
import pathlib

import pytest

from figrender import FigureRecipe, RecipeError, RecipeInput, load_recipe, \
    render

HERE = pathlib.Path(__file__).resolve().parent


def recipe_path(name):
    return HERE / "recipes" / name


def golden(name):
    return str(HERE / "golden" / name)


def load_here(name):
    return load_recipe(recipe_path(name))


class TestRecipeLoading:
    def test_loads_all_checked_in_recipes(self):
        for name in ("fig2.json", "fig3.json", "fig4.json"):
            recipe = load_here(name)
            assert recipe.figure_id == name.split(".")[0]

    def test_unknown_kind_rejected(self):
        with pytest.raises(RecipeError):
            FigureRecipe(figure_id="x", kind="pie",
                         inputs=(RecipeInput(role="grid"),))

    def test_missing_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"figure_id": "x", "inputs": []}))
        with pytest.raises(RecipeError):
            load_recipe(bad)


class TestRendering:
    def test_fig2_timeseries(self, tmp_path):
        out = tmp_path / "fig2.png"
        render(load_here("fig2.json"),
               input_paths=[golden("fig2_run.csv"),
                            golden("fig2_noise.csv")],
               out=str(out))
        assert out.stat().st_size > 10_000

    def test_fig3_heatmap_with_unity_contour(self, tmp_path):
        # the golden grid brackets E = 1, so the contour branch must run;
        # verified by comparing against a render of sub-unity data
        import csv

        out = tmp_path / "fig3.png"
        render(load_here("fig3.json"),
               input_paths=[golden("fig3_grid.csv")], out=str(out))
        rows = list(csv.reader(open(golden("fig3_grid.csv"))))
        effs = [float(r[2]) for r in rows[1:]]
        assert min(effs) < 1.0 < max(effs)

        flat = tmp_path / "flat.csv"
        with open(flat, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(rows[0])
            for r in rows[1:]:
                w.writerow([r[0], r[1], repr(float(r[2]) * 1e-6),
                            r[3], r[4]])
        out_flat = tmp_path / "flat.png"
        render(load_here("fig3.json"), input_paths=[str(flat)],
               out=str(out_flat))
        assert out.read_bytes() != out_flat.read_bytes()

    def test_fig4_lines(self, tmp_path):
        out = tmp_path / "fig4.png"
        render(load_here("fig4.json"),
               input_paths=[golden("fig4_term8.csv")], out=str(out))
        assert out.stat().st_size > 10_000

    def test_rerender_byte_identical(self, tmp_path):
        outs = []
        for i in (1, 2):
            out = tmp_path / f"render{i}.png"
            render(load_here("fig3.json"),
                   input_paths=[golden("fig3_grid.csv")], out=str(out))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        out3 = tmp_path / "fig4a.png"
        out4 = tmp_path / "fig4b.png"
        render(load_here("fig4.json"),
               input_paths=[golden("fig4_term8.csv")], out=str(out3))
        render(load_here("fig4.json"),
               input_paths=[golden("fig4_term8.csv")], out=str(out4))
        assert out3.read_bytes() == out4.read_bytes()

    def test_schema_mismatch_names_missing_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(RecipeError, match="missing column 'axis1'"):
            render(load_here("fig3.json"), input_paths=[str(bad)],
                   out=str(tmp_path / "x.png"))

    def test_empty_csv_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("t_s,re_a_out,im_a_out,abs2_a_out,abs2_a_in\n")
        with pytest.raises(RecipeError, match="empty"):
            render(load_here("fig2.json"),
                   input_paths=[str(empty), str(empty)],
                   out=str(tmp_path / "x.png"))

    def test_partial_grid_rejected(self, tmp_path):
        import csv

        rows = list(csv.reader(open(golden("fig3_grid.csv"))))
        partial = tmp_path / "partial.csv"
        with open(partial, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerows(rows[:-3])      # tear three grid points off
        with pytest.raises(RecipeError, match="full grid"):
            render(load_here("fig3.json"), input_paths=[str(partial)],
                   out=str(tmp_path / "x.png"))


class TestCli:
    def test_render_command(self, tmp_path, capsys):
        from figrender.cli import main

        out = tmp_path / "cli.png"
        rc = main(["render", "--recipe", str(recipe_path("fig4.json")),
                   "--in", golden("fig4_term8.csv"), "--out", str(out)])
        assert rc == 0
        assert out.exists()

    def test_bad_recipe_is_validation_error(self, tmp_path):
        from figrender.cli import main

        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["render", "--recipe", str(bad)]) == 1
