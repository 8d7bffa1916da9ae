//! Known-answer checks shared between the kat test target and the
//! acceptance suite.

use std::collections::HashMap;
use std::path::PathBuf;

use amphikey::suite::{
    aead_open, aead_seal, kdf_extract_expand, kem_decaps, kem_encaps, kem_keygen, mac, sig_keygen,
    sig_sign, sig_verify, ML_DSA_65, ML_KEM_768, X25519,
};

use super::FixedRng;

pub fn testdata(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../testdata")
        .join(file)
}

/// Parse `key = hexvalue` stanzas separated by blank lines.
pub fn parse_stanzas(text: &str) -> Vec<HashMap<String, Vec<u8>>> {
    let mut stanzas = Vec::new();
    let mut current: HashMap<String, Vec<u8>> = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                stanzas.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let key = key.trim().to_lowercase();
            let value = value.trim();
            let bytes = if key == "count" {
                value.parse::<u64>().unwrap().to_be_bytes().to_vec()
            } else {
                hex::decode(value).unwrap_or_else(|_| panic!("bad hex for {key}"))
            };
            current.insert(key, bytes);
        }
    }
    if !current.is_empty() {
        stanzas.push(current);
    }
    stanzas
}

/// Full NIST LWC vector set for Ascon-128a, bit-exact both directions.
pub fn check_ascon_lwc() -> usize {
    let text = std::fs::read_to_string(testdata("ascon128a_lwc_kat.txt")).unwrap();
    let stanzas = parse_stanzas(&text);
    assert_eq!(stanzas.len(), 1089, "full LWC vector set");
    for stanza in &stanzas {
        let key = &stanza["key"];
        let nonce = &stanza["nonce"];
        let pt = stanza.get("pt").cloned().unwrap_or_default();
        let ad = stanza.get("ad").cloned().unwrap_or_default();
        let ct = &stanza["ct"];

        let sealed = aead_seal(key, nonce, &ad, &pt).unwrap();
        assert_eq!(&sealed, ct, "seal mismatch at count {:?}", stanza["count"]);
        let opened = aead_open(key, nonce, &ad, ct).unwrap();
        assert_eq!(opened, pt, "open mismatch at count {:?}", stanza["count"]);
    }
    stanzas.len()
}

/// Seeded ML-KEM-768 vectors: keygen, encapsulation, decapsulation.
pub fn check_mlkem_seeded() -> usize {
    let text = std::fs::read_to_string(testdata("mlkem768_seeded_kat.txt")).unwrap();
    let stanzas = parse_stanzas(&text);
    assert_eq!(stanzas.len(), 8);
    for stanza in &stanzas {
        let mut keygen_entropy = stanza["d"].clone();
        keygen_entropy.extend_from_slice(&stanza["z"]);
        let kp = kem_keygen(ML_KEM_768, &mut FixedRng::new(&keygen_entropy)).unwrap();
        assert_eq!(kp.public, stanza["ek"], "ek mismatch");
        assert_eq!(kp.secret_bytes(), stanza["dk"], "dk mismatch");

        let (ct, ss) =
            kem_encaps(ML_KEM_768, &kp.public, &mut FixedRng::new(&stanza["m"])).unwrap();
        assert_eq!(ct, stanza["ct"], "ct mismatch");
        assert_eq!(ss.as_bytes().as_slice(), stanza["ss"], "ss mismatch");

        let ss2 = kem_decaps(ML_KEM_768, kp.secret_bytes(), &ct).unwrap();
        assert_eq!(ss2.as_bytes().as_slice(), stanza["ss"]);
    }
    stanzas.len()
}

/// Seeded deterministic ML-DSA-65 vectors from an unrelated implementation.
pub fn check_mldsa_seeded() -> usize {
    let text = std::fs::read_to_string(testdata("mldsa65_det_kat.txt")).unwrap();
    let stanzas = parse_stanzas(&text);
    assert_eq!(stanzas.len(), 8);
    for stanza in &stanzas {
        let kp = sig_keygen(ML_DSA_65, &mut FixedRng::new(&stanza["xi"])).unwrap();
        assert_eq!(kp.public, stanza["pk"], "pk mismatch");
        assert_eq!(kp.secret_bytes(), stanza["sk"], "sk mismatch");

        let sig = sig_sign(ML_DSA_65, kp.secret_bytes(), &stanza["msg"]).unwrap();
        assert_eq!(sig, stanza["sig"], "deterministic signature mismatch");
        assert!(sig_verify(ML_DSA_65, &kp.public, &stanza["msg"], &sig).unwrap());
    }
    stanzas.len()
}

/// RFC 7748 §5.2 vector 1 and the §6.1 Diffie-Hellman vectors.
pub fn check_x25519_rfc7748() {
    let scalar =
        hex::decode("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4").unwrap();
    let u = hex::decode("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c").unwrap();
    let out = kem_decaps(X25519, &scalar, &u).unwrap();
    assert_eq!(
        hex::encode(out.as_bytes()),
        "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552"
    );

    let alice_sk =
        hex::decode("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a").unwrap();
    let alice_pk =
        hex::decode("8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a").unwrap();
    let bob_sk =
        hex::decode("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb").unwrap();
    let bob_pk =
        hex::decode("de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f").unwrap();
    let shared = "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742";

    let alice = kem_keygen(X25519, &mut FixedRng::new(&alice_sk)).unwrap();
    assert_eq!(alice.public, alice_pk);
    let bob = kem_keygen(X25519, &mut FixedRng::new(&bob_sk)).unwrap();
    assert_eq!(bob.public, bob_pk);

    let s1 = kem_decaps(X25519, alice.secret_bytes(), &bob.public).unwrap();
    let s2 = kem_decaps(X25519, bob.secret_bytes(), &alice.public).unwrap();
    assert_eq!(hex::encode(s1.as_bytes()), shared);
    assert_eq!(hex::encode(s2.as_bytes()), shared);
}

/// RFC 5869 appendix A, the three SHA-256 cases.
pub fn check_hkdf_rfc5869() {
    let okm = kdf_extract_expand(
        &[0x0b; 22],
        &hex::decode("000102030405060708090a0b0c").unwrap(),
        &hex::decode("f0f1f2f3f4f5f6f7f8f9").unwrap(),
        42,
    )
    .unwrap();
    assert_eq!(
        hex::encode(&okm),
        "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865"
    );

    let ikm: Vec<u8> = (0x00..=0x4f).collect();
    let salt: Vec<u8> = (0x60..=0xaf).collect();
    let info: Vec<u8> = (0xb0..=0xff).collect();
    let okm = kdf_extract_expand(&ikm, &salt, &info, 82).unwrap();
    assert_eq!(
        hex::encode(&okm),
        "b11e398dc80327a1c8e7f78c596a49344f012eda2d4efad8a050cc4c19afa97c\
         59045a99cac7827271cb41c65e590e09da3275600c2f09b8367793a9aca3db71\
         cc30c58179ec3e87c14c01d5c1f3434f1d87"
    );

    let okm = kdf_extract_expand(&[0x0b; 22], b"", b"", 42).unwrap();
    assert_eq!(
        hex::encode(&okm),
        "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d9d201395faa4b61a96c8"
    );
}

/// RFC 4231 §4, the HMAC-SHA-256 column.
pub fn check_hmac_rfc4231() {
    let cases: [(Vec<u8>, Vec<u8>, &str); 6] = [
        (
            vec![0x0b; 20],
            b"Hi There".to_vec(),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
        ),
        (
            b"Jefe".to_vec(),
            b"what do ya want for nothing?".to_vec(),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843",
        ),
        (
            vec![0xaa; 20],
            vec![0xdd; 50],
            "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe",
        ),
        (
            (0x01..=0x19).collect(),
            vec![0xcd; 50],
            "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b",
        ),
        (
            vec![0xaa; 131],
            b"Test Using Larger Than Block-Size Key - Hash Key First".to_vec(),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54",
        ),
        (
            vec![0xaa; 131],
            b"This is a test using a larger than block-size key and a larger than block-size data. The key needs to be hashed before being used by the HMAC algorithm."
                .to_vec(),
            "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2",
        ),
    ];
    for (i, (key, msg, want)) in cases.iter().enumerate() {
        let tag = mac(key, msg);
        assert_eq!(hex::encode(tag), *want, "case {}", i + 1);
    }

    let tag = mac(&[0x0c; 20], b"Test With Truncation");
    assert_eq!(hex::encode(&tag[..16]), "a3b6167473100ee06e0c796c2955552b");
}
