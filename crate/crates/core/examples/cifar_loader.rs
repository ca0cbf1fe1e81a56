//! Loads CIFAR-10 from the binary batch files.
//!
//! ```text
//! cargo run --release --example cifar_loader -- /path/to/cifar-10-batches-bin
//! ```
//!
//! Without an argument a two-record batch is encoded to a temporary file and
//! decoded again.

use backdoor_lab::data::cifar::{self, encode_batch, load_batch, load_cifar10};
use backdoor_lab::data::{gen_synthetic, Dataset};

fn describe(name: &str, ds: &Dataset) {
    println!(
        "{name}: {} images of shape {:?}, per class {:?}",
        ds.len(),
        ds.sample_shape(),
        ds.class_counts()
    );
}

fn main() -> backdoor_lab::Result<()> {
    if let Some(dir) = std::env::args_os().nth(1) {
        let (train, test) = load_cifar10(dir.as_ref())?;
        describe("train", &train);
        describe("test", &test);
        return Ok(());
    }
    let ds = gen_synthetic(cifar::NUM_CLASSES, 1, &cifar::IMAGE_SHAPE, 0)?.subset(&[3, 8]);
    let bytes = encode_batch(&ds)?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("data_batch_1.bin");
    std::fs::write(&path, &bytes)?;
    println!(
        "wrote {} bytes ({} per record)",
        bytes.len(),
        cifar::RECORD_BYTES
    );
    let back = load_batch(&path)?;
    describe("decoded", &back);
    println!("labels {:?}", back.labels());
    Ok(())
}
