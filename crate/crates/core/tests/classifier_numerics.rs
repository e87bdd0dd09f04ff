use albalance_core::classifier::softmax::{cross_entropy_gradient_into, cross_entropy_objective, MlpParams};
use albalance_core::classifier::svm::BinaryProblem;
use albalance_core::classifier::{
    per_class_recall, rectify_by_priors, train_scheme, Scheme, SchemeConfigs, TrainingSet,
};
use albalance_core::rng::seeded;
use albalance_core::synthetic::BlobModel;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const H: f64 = 1e-5;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(1e-12)
}

fn random_set(n: usize, dim: usize, n_classes: usize, seed: u64) -> TrainingSet {
    let mut rng = seeded(seed);
    let x = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let labels = (0..n).map(|i| i % n_classes).collect();
    TrainingSet::from_parts(dim, x, labels, n_classes)
}

#[test]
fn hinge_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let set = random_set(40, 6, 3, seed);
        let problem = BinaryProblem::one_vs_rest(&set, 1, &[0.5, 2.0, 1.0], 1e-2);
        let mut rng = seeded(100 + seed);
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b = rng.random_range(-0.2..0.2);
        let rows = problem.all_rows();

        let mut grad = vec![0.0; 6];
        let grad_b = problem.gradient_into(&w, b, &rows, &mut grad);
        grad.push(grad_b);

        let mut numeric = Vec::new();
        for j in 0..7 {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < 6 {
                wp[j] += H;
                wm[j] -= H;
            } else {
                bp += H;
                bm -= H;
            }
            numeric.push((problem.objective(&wp, bp, &rows) - problem.objective(&wm, bm, &rows)) / (2.0 * H));
        }
        let err = rel_err(&grad, &numeric);
        assert!(err <= 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    for (seed, hidden) in [(0u64, 0usize), (1, 5), (2, 8)] {
        let set = random_set(30, 4, 3, seed);
        let present = [true, true, true];
        let mut params = MlpParams::zeros(4, hidden, 3);
        let mut rng = seeded(200 + seed);
        let flat: Vec<f64> = params.to_flat().iter().map(|_| rng.random_range(-0.5..0.5)).collect();
        params.set_flat(&flat);
        let rows: Vec<usize> = (0..set.len()).collect();
        let l2 = 1e-3;

        let mut grad = MlpParams::zeros(4, hidden, 3);
        cross_entropy_gradient_into(&params, &set, &rows, &present, l2, &mut grad);
        let analytic = grad.to_flat();

        let mut numeric = Vec::with_capacity(flat.len());
        for j in 0..flat.len() {
            let mut p = params.clone();
            let mut v = flat.clone();
            v[j] += H;
            p.set_flat(&v);
            let up = cross_entropy_objective(&p, &set, &rows, &present, l2);
            v[j] -= 2.0 * H;
            p.set_flat(&v);
            let down = cross_entropy_objective(&p, &set, &rows, &present, l2);
            numeric.push((up - down) / (2.0 * H));
        }
        let err = rel_err(&analytic, &numeric);
        assert!(err <= 1e-4, "hidden {hidden}: relative error {err}");
    }
}

#[test]
fn uniform_priors_leave_probabilities_unchanged() {
    let mut rng = seeded(3);
    for n in [2usize, 5, 17] {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let z: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let out = rectify_by_priors(&p, &vec![1.0 / n as f64; n]);
        for (a, b) in out.as_slice().iter().zip(&p) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn lowering_a_prior_raises_its_probability() {
    let p = [0.5, 0.3, 0.2];
    let base = rectify_by_priors(&p, &[0.4, 0.3, 0.3]);
    let rarer = rectify_by_priors(&p, &[0.5, 0.3, 0.2]);
    assert!(rarer.as_slice()[2] > base.as_slice()[2]);
    assert!(rarer.as_slice()[0] < base.as_slice()[0]);
    assert!((rarer.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn relabeling_classes_permutes_svm_scores() {
    let data = BlobModel::new(4, 5, 2.0, 1.0, 1).sample(&[30, 12, 20, 8], 2);
    let perm = [2usize, 0, 3, 1];
    let permuted: Vec<usize> = data.oracle.labels().iter().map(|&l| perm[l]).collect();
    let oracle_p = albalance_core::LabelOracle::new(permuted, 4).unwrap();
    let ids: Vec<usize> = (0..data.store.n_samples()).collect();
    let configs = SchemeConfigs::default();
    let a = train_scheme(Scheme::CsSvm, &data.store, &ids, &data.oracle, &configs, 5).unwrap();
    let b = train_scheme(Scheme::CsSvm, &data.store, &ids, &oracle_p, &configs, 5).unwrap();
    for id in 0..10 {
        let (sa, sb) = (a.scores(data.store.row(id)), b.scores(data.store.row(id)));
        for c in 0..4 {
            assert!((sa[c] - sb[perm[c]]).abs() < 1e-12, "sample {id} class {c}");
        }
    }
}

#[test]
fn cost_sensitive_weights_raise_minority_recall() {
    let model = BlobModel::with_centers(vec![vec![0.0, 0.0], vec![1.5, 0.0]], 1.0);
    let test = model.sample(&[500, 500], 99);
    let ids_test: Vec<usize> = (0..test.store.n_samples()).collect();
    let configs = SchemeConfigs::default();
    let (mut weighted, mut plain) = (0.0, 0.0);
    for seed in 0..5 {
        let train = model.sample(&[450, 50], seed);
        let ids: Vec<usize> = (0..train.store.n_samples()).collect();
        for (scheme, acc) in [(Scheme::CsSvm, &mut weighted), (Scheme::SvmPlain, &mut plain)] {
            let m = train_scheme(scheme, &train.store, &ids, &train.oracle, &configs, seed).unwrap();
            let predicted = m.predict(&test.store, &ids_test).unwrap();
            *acc += per_class_recall(&predicted, test.oracle.labels(), 2)[1].unwrap() / 5.0;
        }
    }
    assert!(weighted > plain, "weighted {weighted} vs plain {plain}");
}

#[test]
fn training_never_ends_worse_than_the_first_epoch() {
    let data = BlobModel::new(3, 4, 1.0, 1.0, 4).sample(&[40, 25, 10], 4);
    let ids: Vec<usize> = (0..data.store.n_samples()).collect();
    let configs = SchemeConfigs::default();
    for scheme in [Scheme::CsSvm, Scheme::SoftmaxTh] {
        let m = train_scheme(scheme, &data.store, &ids, &data.oracle, &configs, 1).unwrap();
        assert!(m.meta().final_loss <= m.meta().first_epoch_loss + 1e-12, "{scheme}");
    }
}
