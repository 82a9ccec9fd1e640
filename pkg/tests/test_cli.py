"""Command line behaviour: output formats, frozen oracle strings, exit
codes, and reproducibility."""

import csv
import io
import json

import pytest

from popcountlab import cli


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestOracleCommand:
    @pytest.mark.parametrize(
        "argv,expected",
        [
            (["--which", "flip-closed", "--n", "4"], "64/3 ~= 21.333333333333333333"),
            (["--which", "flip-recurrence", "--n", "3"], "10"),
            (
                ["--which", "harmonic", "--n", "10"],
                "7381/252 ~= 29.289682539682539683",
            ),
            (["--which", "gros-term", "--k", "12"], "3"),
            (["--which", "gros-length", "--n", "3"], "7"),
            (
                ["--which", "timeopt-exact", "--n", "2"],
                "4739/508 ~= 9.3287401574803149606",
            ),
        ],
    )
    def test_frozen_outputs(self, capsys, argv, expected):
        code, out, _ = invoke(capsys, "oracle", *argv)
        assert code == 0
        assert out == expected + "\n"

    def test_missing_operand_fails(self, capsys):
        code, _, err = invoke(capsys, "oracle", "--which", "gros-term")
        assert code == 1 and "--k" in err
        code, _, err = invoke(capsys, "oracle", "--which", "harmonic")
        assert code == 1 and "--n" in err

    def test_out_of_range_exact_solve_fails(self, capsys):
        code, _, err = invoke(capsys, "oracle", "--which", "timeopt-exact", "--n", "5")
        assert code == 1 and "exact solve" in err


SIMULATE_ARGS = [
    "simulate",
    "--protocol",
    "flip",
    "--n",
    "4",
    "--trials",
    "50",
    "--scheduler",
    "bst",
    "--seed",
    "7",
]


class TestSimulateCommand:
    def test_csv_shape_and_values(self, capsys):
        code, out, _ = invoke(capsys, *SIMULATE_ARGS)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        row = rows[0]
        assert list(row) == list(cli._ROW_FIELDS)
        assert row["schema_version"] == "1"
        assert row["protocol"] == "flip"
        assert row["rng"] == "numpy-pcg64"
        assert int(row["converged_trials"]) + int(row["truncated_trials"]) == 50
        assert row["oracle_value"] == "64/3"

    def test_csv_floats_round_trip_through_repr(self, capsys):
        _, out, _ = invoke(capsys, *SIMULATE_ARGS)
        row = next(csv.DictReader(io.StringIO(out)))
        _, raw, _ = invoke(capsys, *SIMULATE_ARGS, "--format", "json")
        (payload,) = json.loads(raw)
        for field in ("bst_mean", "bst_stddev", "bst_se", "total_mean"):
            assert float(row[field]) == float(payload[field])

    def test_csv_reserializes_byte_identically(self, capsys):
        _, out, _ = invoke(capsys, *SIMULATE_ARGS)
        rows = list(csv.DictReader(io.StringIO(out)))
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=cli._ROW_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        assert buffer.getvalue() == out

    def test_output_is_deterministic(self, capsys):
        _, first, _ = invoke(capsys, *SIMULATE_ARGS)
        _, second, _ = invoke(capsys, *SIMULATE_ARGS)
        assert first == second

    def test_seed_changes_the_measurements(self, capsys):
        _, first, _ = invoke(capsys, *SIMULATE_ARGS)
        _, other, _ = invoke(capsys, *SIMULATE_ARGS[:-1], "8")
        assert first != other

    def test_adversarial_worst_case_is_reproducible_text(self, capsys):
        args = [
            "simulate",
            "--protocol",
            "gros",
            "--n",
            "3",
            "--scheduler",
            "adversarial",
            "--init",
            "worst",
            "--format",
            "json",
        ]
        code, out, _ = invoke(capsys, *args)
        (payload,) = json.loads(out)
        assert code == 0
        assert payload["nonnull_mean"] == "10.0"
        assert payload["oracle_value"] == "10"
        assert payload["p"] == 4

    def test_explicit_vector_init(self, capsys):
        code, out, _ = invoke(
            capsys,
            "simulate",
            "--protocol",
            "flip",
            "--n",
            "3",
            "--init",
            "vector=1,1,1",
            "--trials",
            "5",
        )
        assert code == 0
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["init"] == "vector=1,1,1"

    def test_incompatible_init_exits_one(self, capsys):
        code, _, err = invoke(
            capsys, "simulate", "--protocol", "flip", "--n", "3", "--init", "worst"
        )
        assert code == 1 and "naming-protocol only" in err

    def test_unparseable_inits_exit_one(self, capsys):
        for init in ("vector=1,a", "bogus"):
            code, _, err = invoke(
                capsys, "simulate", "--protocol", "flip", "--n", "3", "--init", init
            )
            assert code == 1 and "error" in err

    def test_name_space_overflow_exits_one(self, capsys):
        code, _, err = invoke(
            capsys,
            "simulate",
            "--protocol",
            "gros",
            "--n",
            "4",
            "--p",
            "3",
            "--scheduler",
            "adversarial",
        )
        assert code == 1 and "bound" in err

    def test_fully_truncated_batch_exits_two(self, capsys):
        code, _, err = invoke(
            capsys,
            "simulate",
            "--protocol",
            "flip",
            "--n",
            "8",
            "--trials",
            "2",
            "--max-interactions",
            "3",
        )
        assert code == 2 and "converged" in err

    def test_max_interactions_echoes_in_csv(self, capsys):
        code, out, _ = invoke(
            capsys,
            "simulate",
            "--protocol",
            "flip",
            "--n",
            "2",
            "--trials",
            "20",
            "--max-interactions",
            "500",
        )
        assert code == 0
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["max_interactions"] == "500"


class TestArgumentErrors:
    def test_bad_flag_values_exit_one(self):
        for argv in (
            ["simulate", "--protocol", "nope", "--n", "2"],
            ["simulate", "--protocol", "flip", "--n", "0"],
            ["simulate", "--protocol", "flip", "--n", "2", "--seed", str(2 ** 64)],
            ["verify", "--level", "bogus"],
            ["nosuch"],
            [],
        ):
            with pytest.raises(SystemExit) as exc:
                cli.main(argv)
            assert exc.value.code == 1

    def test_format_exact_renders_integers_bare(self):
        from fractions import Fraction

        assert cli.format_exact(Fraction(10)) == "10"
        assert cli.format_exact(Fraction(1, 2)) == "1/2 ~= 0.5"
