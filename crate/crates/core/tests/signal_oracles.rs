mod common;

use bci_ran::signal::{generate_synthetic_dataset, split_dataset, GeneratorConfig};

#[test]
fn clean_defaults_are_separable_by_bandpower() {
    let config = GeneratorConfig::default();
    let data = generate_synthetic_dataset(&config, 250).unwrap();
    let (train, test) = split_dataset(&data, 0.8, 1).unwrap();
    let acc = common::nearest_centroid_accuracy(
        train.windows(),
        test.windows(),
        config.classes,
        &config.class_frequencies,
        config.sample_rate,
    );
    assert!(acc > 0.9, "bandpower oracle accuracy {acc}");
}

#[test]
fn paper_scale_is_separable_by_bandpower() {
    let config = GeneratorConfig::full_scale();
    let data = generate_synthetic_dataset(&config, 40).unwrap();
    let (train, test) = split_dataset(&data, 0.8, 2).unwrap();
    let acc = common::nearest_centroid_accuracy(
        train.windows(),
        test.windows(),
        config.classes,
        &config.class_frequencies,
        config.sample_rate,
    );
    assert!(acc > 0.9, "bandpower oracle accuracy {acc}");
}
