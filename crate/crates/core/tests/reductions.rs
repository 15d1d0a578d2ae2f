use mssvdd::data::{synthetic, SyntheticSpec};
use mssvdd::linear::{train_linear, train_linear_from};
use mssvdd::model::{fit_plain_svdd, ProjectionSet};
use mssvdd::npt::{npt_map_test, npt_preprocess, train_npt};
use mssvdd::{DecisionStrategy, HyperParams, Omega, Variant};
use nalgebra::DVector;

fn spec(dims: Vec<usize>) -> SyntheticSpec {
    SyntheticSpec {
        dims,
        targets: 25,
        outliers: 10,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn single_modality_subspace_run() {
    let data = synthetic(&spec(vec![6, 5])).unwrap();
    for m in 0..2 {
        let single = data.single_modality(m);
        let params = HyperParams {
            beta: 0.0,
            d: 2,
            c: 0.1,
            eta: 0.03,
            max_iter: 10,
            decision: DecisionStrategy::FirstModality,
            ..Default::default()
        };
        let model = train_linear(&single, &params).unwrap();
        assert_eq!(model.modalities(), 1);
        let q = &model.projections.mats[0];
        assert!((q * q.transpose() - nalgebra::DMatrix::identity(2, 2)).amax() < 1e-8);
        assert_eq!(model.predict(&single).unwrap().len(), single.len());
    }
}

#[test]
fn plain_description_is_the_identity_subspace_model() {
    let data = synthetic(&spec(vec![4, 3])).unwrap();
    let plain = fit_plain_svdd(&data, 0.2, false).unwrap();
    let concat = data.concatenated().targets();
    let params = HyperParams {
        c: 0.2,
        d: 7,
        max_iter: 0,
        beta: 0.0,
        decision: DecisionStrategy::FirstModality,
        ..Default::default()
    };
    let direct = train_linear_from(&concat.x, &params, ProjectionSet::identity(&[7]).unwrap(), None).unwrap();
    assert_eq!(plain.dual.alpha, direct.dual.alpha);
    assert_eq!(plain.dual.r_squared, direct.dual.r_squared);
}

#[test]
fn duplicate_modalities_share_an_embedding() {
    let base = synthetic(&spec(vec![5])).unwrap().targets();
    let mut dup = base.clone();
    dup.x.push(base.x[0].clone());
    dup.modality_names.push("copy".into());
    let (_, state) = npt_preprocess(&dup, 2.0).unwrap();
    let (a, b) = (&state.modalities[0].embedding, &state.modalities[1].embedding);
    assert_eq!(a.rank(), b.rank());
    for r in 0..a.rank() {
        let (ra, rb) = (a.phi.row(r), b.phi.row(r));
        let same = (ra - rb).amax();
        let flipped = (ra + rb).amax();
        assert!(same.min(flipped) < 1e-8, "direction {r}");
    }
}

#[test]
fn distant_point_maps_to_the_limiting_form() {
    let data = synthetic(&spec(vec![4])).unwrap().targets();
    let (_, state) = npt_preprocess(&data, 1.0).unwrap();
    let far = DVector::from_element(4, 1e3);
    let phi = npt_map_test(&state, 0, &far).unwrap();
    let md = &state.modalities[0];
    let n = md.gram.nrows();
    // Zero kernel column: (I − E)(−K1/N), mapped by A^{-1/2}Uᵀ.
    let mean = md.gram.column_mean();
    let v = -&mean;
    let centered = v.add_scalar(-v.mean());
    let expected = md.embedding.map(&centered);
    assert!(phi.iter().all(|x| x.is_finite()));
    assert!((phi - expected).amax() < 1e-9, "n = {n}");
}

#[test]
fn npt_training_representation_matches_scoring_path() {
    let data = synthetic(&spec(vec![5, 4])).unwrap();
    let params = HyperParams {
        variant: Variant::Npt,
        omega: Omega::AlphaScatter,
        sigma: 3.0,
        d: 2,
        c: 0.2,
        eta: 0.03,
        max_iter: 5,
        ..Default::default()
    };
    let model = train_npt(&data, &params).unwrap();
    let targets = data.targets();
    for m in 0..2 {
        let block = model.train_repr.block(m);
        for i in 0..targets.len() {
            let y = model.represent(m, &targets.x[m].column(i).into_owned()).unwrap();
            assert!((y - block.column(i)).amax() < 1e-6);
        }
    }
}
