#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Arc, Mutex, OnceLock};

pub fn fracspec(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracspec"));
    cmd.args(args).env_remove("FRACSPEC_CACHE");
    if let Some(dir) = cache {
        cmd.env("FRACSPEC_CACHE", dir);
    }
    cmd.output().expect("failed to launch fracspec")
}

pub fn stdout_ok(args: &[&str], cache: Option<&Path>) -> String {
    let out = fracspec(args, cache);
    assert!(
        out.status.success(),
        "fracspec {args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

pub fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    serde_json::from_str(&stdout_ok(&all, None)).expect("valid JSON document")
}

type Slot = Arc<OnceLock<String>>;

/// CSV of `run-preset name --jobs n`, computed once per process. With
/// `cache` set the run goes through a Galerkin cache under the target dir.
pub fn preset_csv(name: &str, jobs: usize, cache: bool) -> String {
    static RUNS: OnceLock<Mutex<HashMap<(String, usize, bool), Slot>>> = OnceLock::new();
    let slot = {
        let mut map = RUNS.get_or_init(Default::default).lock().unwrap();
        map.entry((name.to_string(), jobs, cache)).or_default().clone()
    };
    slot.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("galerkin-cache");
        let jobs = jobs.to_string();
        stdout_ok(&["run-preset", name, "--jobs", &jobs], cache.then_some(dir.as_path()))
    })
    .clone()
}

pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(csv: &str) -> Self {
        let mut comments = Vec::new();
        let mut lines = Vec::new();
        for l in csv.lines() {
            match l.strip_prefix("# ") {
                Some(c) => comments.push(c.to_string()),
                None => lines.push(l),
            }
        }
        let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
        let header = split(lines[0]);
        let rows = lines[1..].iter().map(|l| split(l)).collect();
        Self { comments, header, rows }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn num(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }

    pub fn tolerance(&self) -> f64 {
        self.comments
            .iter()
            .find_map(|c| c.strip_prefix("tolerance: "))
            .expect("tolerance header")
            .parse()
            .unwrap()
    }
}
