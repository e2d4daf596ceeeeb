use std::fs;
use std::io::Write;

use mpomps::io::{self, Network};
use mpomps::random::{random_mpo, random_mps};
use mpomps::{DenseTensor, Error, C64};

#[test]
fn networks_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let nets = [
        Network::Mps(random_mps(5, 3, 4, -0.5, 1).unwrap()),
        Network::Mpo(random_mpo(4, 2, 3, -0.5, 2).unwrap()),
        Network::Dense(DenseTensor::from_fn(&[2, 3], |ix| C64::new(ix[0] as f64, -(ix[1] as f64)))),
    ];
    for (i, net) in nets.iter().enumerate() {
        let path = dir.path().join(format!("{i}.tnc"));
        io::save(net, &path).unwrap();
        assert_eq!(&io::load(&path).unwrap(), net);
    }
}

#[test]
fn corrupted_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.tnc");
    io::save(&Network::Mps(random_mps(4, 2, 2, -0.5, 3).unwrap()), &path).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() - 20;
    bytes[mid] ^= 0x40;
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(io::load(&path), Err(Error::Checksum { .. })));

    let short = dir.path().join("short.tnc");
    fs::File::create(&short).unwrap().write_all(&bytes[..bytes.len() / 2]).unwrap();
    assert!(io::load(&short).is_err());

    let other = dir.path().join("v2.tnc");
    fs::write(&other, b"TNC2 {}\n").unwrap();
    assert!(matches!(io::load(&other), Err(Error::Version(_))));
}
