use std::path::Path;
use std::process::Command;

use fescale::benchmarks::{Benchmark, RveKind};
use fescale::config::{MacroSpec, RveSpec};
use fescale::meshio::write_mesh;
use fescale::{load_config, run_suite, ConfigError};
use fescale_core::mesh::grid::{rectangle, GridSpec};
use fescale_core::mesh::ElementKind;
use fescale_core::twoscale::{Scheme, SolverSettings};

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
schemes = ["staggered", "monolithic", "monolithic-stored"]

[model]
benchmark = "notched-shear"
cells = 2

[rve]
builtin = "porous-square"
cells = 4

[solver]
dt_initial = 0.05
dt_max = 0.05
"#;

#[test]
fn minimal_config_takes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.toml",
        "schemes = [\"monolithic\"]\n[model]\nbenchmark = \"notched-shear\"\n",
    );
    let c = load_config(&path).unwrap();
    assert_eq!(c.schemes, vec![Scheme::Monolithic]);
    assert_eq!(c.name, "notched-shear");
    assert_eq!(
        c.macro_model,
        MacroSpec::Builtin {
            benchmark: Benchmark::NotchedShear,
            cells: Benchmark::NotchedShear.default_cells()
        }
    );
    assert_eq!(
        c.rve,
        RveSpec::Builtin {
            kind: RveKind::PorousSquare,
            cells: 8
        }
    );
    assert_eq!(c.settings, Benchmark::NotchedShear.default_settings());
    assert_eq!(c.materials, vec![Benchmark::NotchedShear.matrix_material()]);
}

#[test]
fn echoed_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = load_config(&write(dir.path(), "c.toml", SMALL)).unwrap();
    let again = load_config(&write(dir.path(), "echo.toml", &c.to_toml())).unwrap();
    assert_eq!(again, c);
}

#[test]
fn syntax_errors_report_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.toml",
        "[model]\nbenchmark = \"notched-shear\"\nbogus = 1\n",
    );
    match load_config(&path).unwrap_err() {
        ConfigError::Parse { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn invalid_settings_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.toml",
        "[model]\nbenchmark = \"notched-shear\"\n[solver]\ncut_factor = 1.5\n",
    );
    match load_config(&path).unwrap_err() {
        ConfigError::Invalid { field, message } => {
            assert_eq!(field, "solver");
            assert!(message.contains("cut_factor"), "{message}");
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn missing_mesh_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.toml",
        "[model]\nbenchmark = \"notched-shear\"\n[rve]\nmesh = \"nowhere.mesh\"\n",
    );
    assert!(matches!(load_config(&path).unwrap_err(), ConfigError::Io { .. }));
}

#[test]
fn inconsistent_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("[model]\n", "model"),
        ("[model]\nbenchmark = \"nope\"\n", "model.benchmark"),
        ("[model]\nbenchmark = \"notched-shear\"\ncells = 1\n", "model.cells"),
        ("schemes = []\n[model]\nbenchmark = \"notched-shear\"\n", "schemes"),
        ("schemes = [\"newton\"]\n[model]\nbenchmark = \"notched-shear\"\n", "schemes"),
        (
            "[model]\nbenchmark = \"notched-shear\"\n[rve]\nbuiltin = \"laminate\"\n[[materials]]\nmodel = \"elastic\"\nyoung = 1.0\npoisson = 0.3\n",
            "materials",
        ),
        (
            "[model]\nbenchmark = \"notched-shear\"\n[[materials]]\nmodel = \"plastic\"\nyoung = 1.0\npoisson = 0.3\n",
            "materials[0]",
        ),
    ] {
        match load_config(&write(dir.path(), "c.toml", text)) {
            Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn mesh_file_models_run() {
    let dir = tempfile::tempdir().unwrap();
    let macro_mesh = rectangle(&GridSpec::unit_square(2, ElementKind::Quad4), |_| Some(0));
    write(dir.path(), "block.mesh", &write_mesh(&macro_mesh));
    let cell = rectangle(&GridSpec::unit_square(2, ElementKind::Tri3), |c| {
        Some(usize::from(c[0] > 0.5))
    });
    write(dir.path(), "cell.mesh", &write_mesh(&cell));
    let text = r#"
schemes = ["staggered", "monolithic-stored"]
output = "out"

[model]
mesh = "block.mesh"
boundary = [
    { side = "y_min", component = "both" },
    { side = "y_max", component = "x", value = 0.01 },
    { side = "y_max", component = "y" },
]
reaction = { side = "y_max", component = "x" }
control = { node = 8, component = "x" }

[rve]
mesh = "cell.mesh"

[[materials]]
model = "plastic"
young = 100.0
poisson = 0.3
yield_stress = 1.0
hardening = 2.0

[[materials]]
model = "elastic"
young = 300.0
poisson = 0.2

[solver]
dt_initial = 0.25
dt_max = 0.25
"#;
    let mut c = load_config(&write(dir.path(), "c.toml", text)).unwrap();
    assert_eq!(c.name, "block");
    let echoed = load_config(&write(dir.path(), "echo.toml", &c.to_toml())).unwrap();
    assert_eq!(echoed, c);
    c.output = dir.path().join("out");
    let outcome = run_suite(&c).unwrap();
    assert!(outcome.all_converged());
    let stag = &outcome.get(Scheme::Staggered).unwrap().report;
    let mono = &outcome.get(Scheme::MonolithicStored).unwrap().report;
    let (a, b) = (stag.curve.last().unwrap(), mono.curve.last().unwrap());
    assert_eq!(a.control_value, 0.01);
    assert!(a.reaction > 0.0);
    assert!((a.reaction - b.reaction).abs() <= 1e-6 * a.reaction);
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn reports_are_reproducible_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = load_config(&write(dir.path(), "c.toml", SMALL)).unwrap();
    c.output = dir.path().join("a");
    let first = run_suite(&c).unwrap();
    c.output = dir.path().join("b");
    let second = run_suite(&c).unwrap();

    for scheme in Scheme::ALL {
        let name = scheme.name();
        let a = std::fs::read(first.directory.join(format!("{name}_curve.csv"))).unwrap();
        let b = std::fs::read(second.directory.join(format!("{name}_curve.csv"))).unwrap();
        assert_eq!(a, b, "{name} curve differs between runs");
        // everything but the timing column
        let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
            rows.into_iter()
                .map(|mut r| {
                    r.remove(5);
                    r
                })
                .collect()
        };
        let sa = strip(csv(&first.directory.join(format!("{name}_stats.csv"))));
        let sb = strip(csv(&second.directory.join(format!("{name}_stats.csv"))));
        assert_eq!(sa, sb);
    }

    let summary = csv(&first.directory.join("summary.csv"));
    let header = &summary[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let total = |scheme: &str| -> usize {
        csv(&first.directory.join(format!("{scheme}_stats.csv")))[1..]
            .iter()
            .map(|r| r[4].parse::<usize>().unwrap())
            .sum()
    };
    let base = total("staggered") as f64;
    for row in &summary[1..] {
        let scheme = &row[0];
        assert_eq!(row[col("factorizations")].parse::<usize>().unwrap(), total(scheme));
        let ratio: f64 = row[col("factorization_ratio")].parse().unwrap();
        assert!((ratio - total(scheme) as f64 / base).abs() < 1e-6, "{scheme}");
    }
    let stored = summary.iter().find(|r| r[0] == "monolithic-stored").unwrap();
    assert!(stored[col("factorization_ratio")].parse::<f64>().unwrap() < 1.0);
    assert!(first.directory.join("config.toml").exists());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_fescale");
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[model]\n");
    let status = Command::new(exe).args(["run", bad.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let good = write(dir.path(), "good.toml", SMALL);
    let out = dir.path().join("out");
    let status = Command::new(exe)
        .args([
            "run",
            good.to_str().unwrap(),
            "--schemes",
            "staggered,monolithic-stored",
            "--out",
        ])
        .arg(&out)
        .env("FESCALE_WORKERS", "2")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let written = std::fs::read_to_string(out.join("notched-shear/config.toml")).unwrap();
    assert!(written.contains("parallel_workers = 2"), "{written}");
    assert!(!out.join("notched-shear/monolithic_curve.csv").exists());

    // a step budget that cannot be met fails the run, not the program
    let hard = write(
        dir.path(),
        "hard.toml",
        &format!("{SMALL}max_macro_iter = 1\ndt_min = 0.04\n"),
    );
    let status = Command::new(exe)
        .args(["run", hard.to_str().unwrap(), "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn default_settings_are_valid_for_every_benchmark() {
    for b in Benchmark::ALL {
        b.default_settings().validate().unwrap();
        assert_ne!(b.default_settings(), SolverSettings::default());
    }
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            c.build_model().unwrap();
            n += 1;
        }
    }
    assert_eq!(n, 4);
}
