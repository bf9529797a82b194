use els_fhe::*;
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

struct Fixture {
    ctx: Arc<FvContext>,
    keys: KeyPair,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let params = FvParams::with_modulus_bits(64, BigUint::from(65537u32), 120, 3.2, 1 << 30).unwrap();
        let ctx = FvContext::new(params).unwrap();
        let keys = keygen(&ctx, b"identities");
        Fixture { ctx, keys }
    })
}

fn plaintext(coeffs: &[i64]) -> Plaintext {
    Plaintext::from_i64(coeffs, fixture().ctx.params()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn add_and_mul_identities(
        a in prop::collection::vec(-32768i64..=32768, 64),
        b in prop::collection::vec(-32768i64..=32768, 64),
        nonce in any::<u64>(),
    ) {
        let f = fixture();
        let t = &f.ctx.params().t;
        let (ma, mb) = (plaintext(&a), plaintext(&b));
        let ca = encrypt(&f.ctx, &f.keys.public, &ma, &nonce.to_le_bytes()).unwrap();
        let cb = encrypt(&f.ctx, &f.keys.public, &mb, &(!nonce).to_le_bytes()).unwrap();
        let sum = add(&f.ctx, &ca, &cb).unwrap();
        prop_assert_eq!(decrypt(&f.ctx, &f.keys.secret, &sum).unwrap(), ma.ring_add(&mb, t));
        let prod = hom_mul(&f.ctx, &f.keys.relin, &ca, &cb).unwrap();
        prop_assert!(noise_budget(&f.ctx, &f.keys.secret, &prod).unwrap() > 0.0);
        prop_assert_eq!(decrypt(&f.ctx, &f.keys.secret, &prod).unwrap(), ma.ring_mul(&mb, t));
    }
}

#[test]
fn identity_elements() {
    let f = fixture();
    let m = plaintext(&[9, -4, 0, 17]);
    let c = encrypt(&f.ctx, &f.keys.public, &m, b"m").unwrap();
    let zero = encrypt(&f.ctx, &f.keys.public, &plaintext(&[]), b"z").unwrap();
    let one = encrypt(&f.ctx, &f.keys.public, &plaintext(&[1]), b"o").unwrap();
    assert_eq!(decrypt(&f.ctx, &f.keys.secret, &add(&f.ctx, &c, &zero).unwrap()).unwrap(), m);
    let times_one = hom_mul(&f.ctx, &f.keys.relin, &c, &one).unwrap();
    assert_eq!(decrypt(&f.ctx, &f.keys.secret, &times_one).unwrap(), m);
    assert_eq!(decrypt(&f.ctx, &f.keys.secret, &plain_add(&f.ctx, &c, &plaintext(&[])).unwrap()).unwrap(), m);
}

#[test]
fn affine_combination_against_big_integer_oracle() {
    let f = fixture();
    let t = &f.ctx.params().t;
    for i in 0..20i64 {
        let (a, b, c) = (3 * i - 17, 101 - 7 * i, i * i - 50);
        let enc = |v: i64, tag: u8| encrypt(&f.ctx, &f.keys.public, &plaintext(&[v, 1]), &[tag, i as u8]).unwrap();
        let r = add(&f.ctx, &hom_mul(&f.ctx, &f.keys.relin, &enc(a, 0), &enc(b, 1)).unwrap(), &enc(c, 2)).unwrap();
        // (a + x)(b + x) + (c + x) = ab + c + (a + b + 1) x + x^2
        let want = Plaintext::new(
            &[BigInt::from(a * b + c), BigInt::from(a + b + 1), BigInt::from(1)],
            f.ctx.params(),
        )
        .unwrap();
        assert_eq!(decrypt(&f.ctx, &f.keys.secret, &r).unwrap(), want);
        let _ = t;
    }
}

#[test]
fn noise_budget_is_monotone() {
    let f = fixture();
    let mut c = encrypt(&f.ctx, &f.keys.public, &plaintext(&[2]), b"chain").unwrap();
    let x = encrypt(&f.ctx, &f.keys.public, &plaintext(&[3]), b"x").unwrap();
    let mut last = noise_budget(&f.ctx, &f.keys.secret, &c).unwrap();
    assert!(last > 0.0);
    let mut value = 2i64;
    for _ in 0..3 {
        c = hom_mul(&f.ctx, &f.keys.relin, &c, &x).unwrap();
        value *= 3;
        let b = noise_budget(&f.ctx, &f.keys.secret, &c).unwrap();
        assert!(b <= last, "{b} > {last}");
        last = b;
        assert_eq!(decrypt(&f.ctx, &f.keys.secret, &c).unwrap(), plaintext(&[value]));
    }
    for _ in 0..6 {
        c = add(&f.ctx, &c, &c).unwrap();
        let b = noise_budget(&f.ctx, &f.keys.secret, &c).unwrap();
        assert!(b <= last + 1e-9, "{b} > {last}");
        last = b;
    }
}

#[test]
fn weighted_sum_with_binomial_weights() {
    let f = fixture();
    let values = [5i64, -3, 8, 1, -7];
    let weights = [1i64, 4, 6, 4, 1];
    let mut acc: Option<Ciphertext> = None;
    for (i, (&v, &w)) in values.iter().zip(&weights).enumerate() {
        let c = encrypt(&f.ctx, &f.keys.public, &plaintext(&[v]), &[i as u8]).unwrap();
        let term = plain_mul(&f.ctx, &c, &plaintext(&[w])).unwrap();
        acc = Some(match acc {
            None => term,
            Some(a) => add(&f.ctx, &a, &term).unwrap(),
        });
    }
    let acc = acc.unwrap();
    assert_eq!(acc.level(), 1);
    let want: i64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
    assert_eq!(decrypt(&f.ctx, &f.keys.secret, &acc).unwrap(), plaintext(&[want]));
}
