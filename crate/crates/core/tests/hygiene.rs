use radauto::evaluate::{fit_iteration, predict_iteration, random_split_plan};
use radauto::features::extract_table;
use radauto::model::FeatureGroup;
use radauto::phantom::{generate_dataset, PhantomSpec};
use radauto::search::{SearchSettings, TrainingData};

fn phantom_data() -> (TrainingData, Vec<String>) {
    let cases = generate_dataset(&PhantomSpec::high_contrast(10, [20, 20, 20], 31)).unwrap();
    let input: Vec<_> = cases.iter().map(|c| (c.record.id.clone(), c.image.clone(), c.mask.clone())).collect();
    let table = extract_table(&input, &[FeatureGroup::Histogram, FeatureGroup::Glcm, FeatureGroup::Shape]).unwrap();
    let labels: Vec<u8> = cases.iter().map(|c| c.record.label).collect();
    let batches = cases.iter().map(|c| c.record.batch.clone().unwrap()).collect();
    (TrainingData::from_table(&table, &labels).unwrap(), batches)
}

#[test]
fn fitting_never_reads_test_rows() {
    let (data, batches) = phantom_data();
    let split = random_split_plan(&data.y, 1, 0.2, 3).unwrap().splits.remove(0);
    let settings = SearchSettings { budget: 30, ensemble: 5, ..SearchSettings::default() };
    let clean = fit_iteration(&data, Some(&batches), &split.train, &settings, 17).unwrap();

    for poison in [f64::NAN, 1e300, -7.0] {
        let mut dirty = data.clone();
        let mut dirty_batches = batches.clone();
        for &i in &split.test {
            for j in 0..dirty.x.cols {
                dirty.x.set(i, j, poison);
            }
            dirty.y[i] = 1 - dirty.y[i];
            dirty_batches[i] = "never-seen".into();
        }
        let fitted = fit_iteration(&dirty, Some(&dirty_batches), &split.train, &settings, 17).unwrap();
        assert_eq!(fitted.fingerprint(), clean.fingerprint(), "poison {poison}");
    }

    let own = fit_iteration(&data.subset(&split.train), Some(&split.train.iter().map(|&i| batches[i].clone()).collect::<Vec<_>>()), &(0..split.train.len()).collect::<Vec<_>>(), &settings, 17).unwrap();
    assert_eq!(own.fingerprint(), clean.fingerprint());

    let p = predict_iteration(&clean, &data, Some(&batches), &split.test).unwrap();
    assert_eq!(p.len(), split.test.len());
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
}
