use std::f64::consts::PI;
use std::path::Path;

use lth_core::data::scale_features;
use lth_core::models::{bvqc_forward, mvqc_forward};
use lth_core::pruning::initial_mask;
use lth_core::{init_params, preset, train, BuiltinDataset, Dataset, Family, Model, ModelSpec, PreparedData};
use num_complex::Complex64 as C;
use sha2::{Digest, Sha256};

type M4 = [[C; 4]; 4];

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn kron(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> M4 {
    let mut m = [[zero(); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    m
}

fn apply(m: &M4, v: [C; 4]) -> [C; 4] {
    let mut out = [zero(); 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

fn mul(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut m = [[zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn rx(t: f64) -> [[C; 2]; 2] {
    let (s, c) = ((t / 2.0).sin(), (t / 2.0).cos());
    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
}

fn rot(a: f64, b: f64, c: f64) -> [[C; 2]; 2] {
    let rz = |t: f64| [[C::from_polar(1.0, -t / 2.0), zero()], [zero(), C::from_polar(1.0, t / 2.0)]];
    let ry = [
        [C::new((b / 2.0).cos(), 0.0), C::new(-(b / 2.0).sin(), 0.0)],
        [C::new((b / 2.0).sin(), 0.0), C::new((b / 2.0).cos(), 0.0)],
    ];
    mul(rz(c), mul(ry, rz(a)))
}

fn permutation(map: [usize; 4]) -> M4 {
    let mut m = [[zero(); 4]; 4];
    for (from, to) in map.into_iter().enumerate() {
        m[to][from] = C::new(1.0, 0.0);
    }
    m
}

/// `<Z0>`, `<Z1>` of the two-wire layered circuit, built from 4x4 matrices.
fn dense_two_wire(params: &[f64], x: &[f64], layers: usize, reupload: bool) -> [f64; 2] {
    // basis |q0 q1>, index 2*q0 + q1
    let cnot01 = permutation([0, 1, 3, 2]);
    let cnot10 = permutation([0, 3, 2, 1]);
    let embed = kron(rx(x[0]), rx(x[1]));
    let mut v = [C::new(1.0, 0.0), zero(), zero(), zero()];
    v = apply(&embed, v);
    for l in 0..layers {
        if reupload && l > 0 {
            v = apply(&embed, v);
        }
        let p = &params[6 * l..6 * l + 6];
        v = apply(&kron(rot(p[0], p[1], p[2]), rot(p[3], p[4], p[5])), v);
        v = apply(&cnot10, apply(&cnot01, v));
    }
    let prob: Vec<f64> = v.iter().map(|a| a.norm_sqr()).collect();
    [prob[0] + prob[1] - prob[2] - prob[3], prob[0] - prob[1] + prob[2] - prob[3]]
}

#[test]
fn two_wire_forward_matches_dense_matrices() {
    for (seed, reupload) in [(1, false), (2, true), (3, true)] {
        let x = [0.3 * seed as f64, PI - 0.7];
        let spec = ModelSpec::mvqc(2, 2, 3, PI).with_reuploading(reupload).with_seed(seed);
        let mut params = init_params(&spec).unwrap().into_inner();
        let n = params.len();
        params[n - 4..].copy_from_slice(&[1.7, -0.2, 0.6, 0.4]);
        let z = dense_two_wire(&params, &x, 3, reupload);
        let logits = [1.7 * z[0] - 0.2, 0.6 * z[1] + 0.4];
        let total = logits[0].exp() + logits[1].exp();
        let probs = mvqc_forward(&spec, &params, &x).unwrap();
        for k in 0..2 {
            assert!((probs[k] - logits[k].exp() / total).abs() < 1e-12);
        }

        let spec = ModelSpec::bvqc(2, 3, PI).with_reuploading(reupload).with_seed(seed);
        let mut params = init_params(&spec).unwrap().into_inner();
        let n = params.len();
        params[n - 2..].copy_from_slice(&[-1.3, 0.25]);
        let z = dense_two_wire(&params, &x, 3, reupload);
        assert!((bvqc_forward(&spec, &params, &x).unwrap() - (-1.3 * z[0] + 0.25)).abs() < 1e-12);
    }
}

#[test]
fn untrained_mvqc_is_near_chance() {
    let iris = scale_features(&Dataset::iris(), (0.0, PI)).unwrap();
    let p = preset(BuiltinDataset::Iris, Family::Mvqc).unwrap();
    let mut total = 0.0;
    for seed in 0..50 {
        let spec = p.model_spec(4, 3).with_seed(seed);
        let model = Model::new(spec.clone()).unwrap();
        let params = init_params(&spec).unwrap().into_inner();
        let hits = iris
            .samples()
            .filter(|(x, y)| model.predict(&params, x).unwrap() == *y)
            .count();
        total += hits as f64 / iris.len() as f64;
    }
    let mean = total / 50.0;
    assert!((mean - 1.0 / 3.0).abs() <= 0.1, "{mean}");
}

#[test]
fn training_lowers_loss_on_simplified_iris() {
    let data = BuiltinDataset::Iris2.load();
    for family in [Family::Bvqc, Family::Mvqc, Family::Snn] {
        let p = preset(BuiltinDataset::Iris2, family).unwrap();
        let mut config = p.train_config();
        config.epochs = 15;
        for seed in 0..10 {
            let spec = p.model_spec(4, 2).with_seed(seed);
            let model = Model::new(spec.clone()).unwrap();
            let prepared = PreparedData::standard(&data, seed).unwrap();
            config.seed = seed;
            let (_, h) = train(&model, init_params(&spec).unwrap(), &initial_mask(&spec), &prepared, &config).unwrap();
            let (first, last) = (h.train_loss[0], *h.train_loss.last().unwrap());
            assert!(last < first, "{family} seed {seed}: {first} -> {last}");
        }
    }
}

fn sha256_hex(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn bundled_dataset_checksums() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    assert_eq!(
        sha256_hex(&dir.join("iris.csv")),
        "9cc1c345c71bcc9b486b74cbf6063fa66f4bb5e0f603a4b3c3471ec2e5e8e355"
    );
    assert_eq!(
        sha256_hex(&dir.join("wine.csv")),
        "fa22916fb8470f7dd918aa23cc22b739d728c4be2dd5c636aa23e6fc8f63fa6e"
    );
}
