//! Published known-answer vectors for both protocols at `p = 65537`, and a
//! runner that checks the implementation against all of them.

use num_bigint::BigUint;

use crate::matrix::Matrix;

pub const P: u64 = 65537;

fn values(rows: &[&[u64]]) -> Matrix {
    Matrix::from_rows(rows, &BigUint::from(P)).expect("fixture matrix")
}

fn exponents(rows: &[&[u64]]) -> Matrix {
    Matrix::from_rows(rows, &BigUint::from(P - 1)).expect("fixture matrix")
}

/// The 5x3 rectangular example.
pub mod rmpf {
    use super::*;
    use crate::field::FieldParams;
    use crate::rmpf::RmpfSetup;

    pub const LAMBDA_A: u64 = 60308;
    pub const OMEGA_A: u64 = 36605;
    pub const LAMBDA_B: u64 = 25401;
    pub const OMEGA_B: u64 = 64763;

    pub fn base() -> Matrix {
        values(&[
            &[44664, 10605, 58177],
            &[37079, 44866, 49280],
            &[45409, 15609, 726],
            &[57731, 9471, 41234],
            &[52116, 32253, 872],
        ])
    }

    pub fn x() -> Matrix {
        values(&[
            &[25454, 62439, 63614],
            &[39060, 9694, 46468],
            &[6392, 43055, 15148],
            &[26377, 42964, 30474],
            &[55812, 12484, 59987],
        ])
    }

    pub fn y() -> Matrix {
        values(&[
            &[32239, 25090, 32249],
            &[31554, 15896, 40908],
            &[53836, 29341, 55133],
            &[49046, 44776, 7840],
            &[53994, 48994, 62776],
        ])
    }

    pub fn setup() -> RmpfSetup {
        RmpfSetup::new(FieldParams::from_u64(P).expect("prime"), base(), x(), y()).expect("fixture setup")
    }

    pub fn a1() -> Matrix {
        exponents(&[
            &[30104, 3724, 21208],
            &[4496, 44632, 7248],
            &[5984, 24620, 39280],
            &[54324, 41616, 65480],
            &[46672, 7504, 43260],
        ])
    }

    pub fn b1() -> Matrix {
        exponents(&[
            &[1843, 63482, 40213],
            &[27706, 44472, 5276],
            &[64796, 23337, 27881],
            &[35646, 35656, 1056],
            &[15682, 32730, 26712],
        ])
    }

    pub fn token_a() -> Matrix {
        values(&[
            &[19050, 55225, 32116],
            &[20307, 33635, 46068],
            &[50694, 64046, 51330],
            &[1754, 3460, 4352],
            &[50272, 26460, 52031],
        ])
    }

    pub fn a2() -> Matrix {
        exponents(&[
            &[44414, 41839, 3598],
            &[13556, 18542, 30308],
            &[30520, 40823, 12492],
            &[27649, 23092, 24378],
            &[5860, 42916, 17787],
        ])
    }

    pub fn b2() -> Matrix {
        exponents(&[
            &[48469, 4086, 40739],
            &[53686, 33160, 32004],
            &[132, 60399, 46127],
            &[32786, 56696, 34528],
            &[9070, 7446, 36328],
        ])
    }

    pub fn token_b() -> Matrix {
        values(&[
            &[8616, 10721, 1187],
            &[43735, 40329, 8281],
            &[52007, 53646, 42109],
            &[20747, 37614, 61557],
            &[18153, 19017, 15289],
        ])
    }

    /// Both parties' key.
    pub fn key() -> Matrix {
        values(&[
            &[23030, 13518, 44672],
            &[8819, 10151, 12163],
            &[21, 40471, 6436],
            &[45352, 62662, 60452],
            &[9532, 30007, 11905],
        ])
    }
}

/// The two-round 5x5 rank-deficient example.
pub mod rdmpf {
    use super::*;
    use crate::field::FieldParams;
    use crate::rdmpf::RdmpfSetup;

    pub const DIM: usize = 5;
    pub const EXP_MAX: u64 = 10000;
    pub const ROUNDS: usize = 2;

    /// `(randX, randY)` for Alice and `(randU, randV)` for Bob, per round.
    pub const ALICE_EXPONENTS: [(u64, u64); 2] = [(4267, 4651), (6171, 2414)];
    pub const BOB_EXPONENTS: [(u64, u64); 2] = [(6066, 8472), (7574, 1456)];

    /// SHA3-512 over the canonical encoding of the combined key list.
    pub const SESSION_KEY_HEX: &str = "549c7058752f9f968d168197c52c7ad4765e58e96edee1041b2f110cb7cc9bc6\
                                       1100fb41b5b9638088a2f9eff3ed973a45b179a982872d770f23a9bc6569d2f3";

    pub fn w() -> Matrix {
        values(&[
            &[36671, 1524, 19050, 12061, 61140],
            &[5366, 34773, 37275, 10709, 60768],
            &[59994, 8372, 16513, 19213, 18024],
            &[22554, 1387, 10646, 57542, 54414],
            &[62130, 15684, 5868, 17933, 2855],
        ])
    }

    pub fn base_xu() -> Matrix {
        values(&[
            &[57543, 23480, 42992, 19549, 59890],
            &[57543, 23480, 42992, 19549, 59890],
            &[43343, 28960, 64751, 37741, 48337],
            &[1091, 62357, 30242, 50955, 3101],
            &[37839, 36136, 38757, 10107, 12470],
        ])
    }

    pub fn base_yv() -> Matrix {
        values(&[
            &[61098, 25692, 18347, 31256, 2737],
            &[61098, 25692, 18347, 31256, 2737],
            &[23628, 47854, 30452, 10898, 3201],
            &[4055, 43906, 6517, 25648, 29018],
            &[13622, 59502, 23730, 40601, 41483],
        ])
    }

    pub fn setup() -> RdmpfSetup {
        RdmpfSetup::new(
            FieldParams::from_u64(P).expect("prime"),
            w(),
            base_xu(),
            base_yv(),
            BigUint::from(EXP_MAX),
            ROUNDS,
        )
        .expect("fixture setup")
    }

    /// Per-round published matrices.
    pub struct Round {
        pub x: Matrix,
        pub y: Matrix,
        pub u: Matrix,
        pub v: Matrix,
        pub token_a: Matrix,
        pub token_b: Matrix,
        pub key: Matrix,
    }

    pub fn rounds() -> [Round; 2] {
        [
            Round {
                x: exponents(&[
                    &[25300, 53591, 3358, 6302, 15971],
                    &[25300, 53591, 3358, 6302, 15971],
                    &[59640, 62777, 43012, 50996, 33510],
                    &[8272, 23015, 13985, 6756, 47019],
                    &[64853, 6353, 9303, 16909, 11272],
                ]),
                y: exponents(&[
                    &[50294, 15396, 2447, 20604, 46313],
                    &[50294, 15396, 2447, 20604, 46313],
                    &[52856, 57814, 29792, 40618, 1969],
                    &[25287, 53714, 4577, 4384, 26014],
                    &[24014, 4806, 32294, 48601, 23187],
                ]),
                u: exponents(&[
                    &[61917, 24420, 29078, 47059, 18070],
                    &[61917, 24420, 29078, 47059, 18070],
                    &[35935, 20952, 51333, 41093, 16163],
                    &[41155, 1979, 10882, 17171, 37033],
                    &[38861, 15750, 29077, 7509, 61114],
                ]),
                v: exponents(&[
                    &[37353, 1020, 59757, 44920, 18981],
                    &[37353, 1020, 59757, 44920, 18981],
                    &[38256, 24936, 25399, 44464, 10051],
                    &[36307, 16166, 52913, 49849, 13652],
                    &[51670, 11528, 54954, 50615, 6058],
                ]),
                token_a: values(&[
                    &[53838, 27572, 60974, 49207, 54423],
                    &[53838, 27572, 60974, 49207, 54423],
                    &[7986, 15752, 8069, 40416, 15771],
                    &[41410, 8254, 42646, 57132, 64087],
                    &[62119, 17840, 19622, 20589, 6234],
                ]),
                token_b: values(&[
                    &[29348, 1649, 29136, 53009, 60590],
                    &[29348, 1649, 29136, 53009, 60590],
                    &[47894, 18698, 17669, 19542, 31170],
                    &[5356, 9122, 3736, 17535, 33881],
                    &[46266, 10907, 21467, 39257, 36010],
                ]),
                key: values(&[
                    &[20743, 10836, 64775, 35222, 44472],
                    &[20743, 10836, 64775, 35222, 44472],
                    &[49310, 2062, 65040, 46960, 24883],
                    &[40381, 25492, 38040, 58289, 65195],
                    &[43404, 25602, 54209, 59994, 36225],
                ]),
            },
            Round {
                x: exponents(&[
                    &[20687, 43044, 29876, 65277, 34570],
                    &[20687, 43044, 29876, 65277, 34570],
                    &[48043, 42272, 30547, 16281, 53097],
                    &[64011, 43209, 15826, 58203, 65225],
                    &[59031, 50156, 13641, 54627, 6418],
                ]),
                y: exponents(&[
                    &[40891, 39362, 36749, 34923, 28810],
                    &[40891, 39362, 36749, 34923, 28810],
                    &[22763, 63190, 28195, 33540, 27134],
                    &[56708, 35280, 14969, 48184, 42201],
                    &[38364, 57222, 24807, 17310, 52808],
                ]),
                u: exponents(&[
                    &[61547, 33968, 56069, 41953, 50743],
                    &[61547, 33968, 56069, 41953, 50743],
                    &[29714, 32573, 36652, 42508, 7927],
                    &[33931, 35041, 24823, 50021, 61711],
                    &[38392, 28428, 60085, 13340, 4043],
                ]),
                v: exponents(&[
                    &[17998, 3012, 8841, 26426, 43907],
                    &[17998, 3012, 8841, 26426, 43907],
                    &[49148, 8686, 26452, 55316, 51969],
                    &[64313, 53978, 52641, 4196, 14662],
                    &[51704, 8754, 12104, 61813, 36643],
                ]),
                token_a: values(&[
                    &[21108, 54710, 20029, 6255, 14963],
                    &[21108, 54710, 20029, 6255, 14963],
                    &[28723, 28942, 9398, 51028, 3356],
                    &[44003, 6940, 4827, 50400, 35084],
                    &[54653, 19386, 46270, 24516, 19667],
                ]),
                token_b: values(&[
                    &[31055, 8992, 38240, 47046, 52571],
                    &[31055, 8992, 38240, 47046, 52571],
                    &[53708, 5236, 39748, 56283, 63932],
                    &[27273, 31500, 58981, 63915, 16157],
                    &[21773, 26963, 14715, 52520, 13589],
                ]),
                key: values(&[
                    &[33253, 42632, 21998, 52285, 49951],
                    &[33253, 42632, 21998, 52285, 49951],
                    &[14086, 35325, 53116, 60717, 41037],
                    &[3238, 39606, 1643, 48792, 26310],
                    &[19481, 30394, 40594, 46821, 12282],
                ]),
            },
        ]
    }
}

/// Outcome of one known-answer check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorCheck {
    pub name: String,
    pub passed: bool,
    pub detail: Option<String>,
}

fn check(out: &mut Vec<VectorCheck>, name: &str, result: crate::Result<bool>) {
    let (passed, detail) = match result {
        Ok(ok) => (ok, None),
        Err(e) => (false, Some(e.to_string())),
    };
    out.push(VectorCheck {
        name: name.to_string(),
        passed,
        detail,
    });
}

/// Recomputes every published value from the published inputs.
pub fn run_all() -> Vec<VectorCheck> {
    use crate::matrix::{mat_pow_mod, mat_scalar_mul_mod};
    use crate::rdmpf::{RdmpfParty, Role};
    use crate::rmpf::{rmpf_derive_key, rmpf_keygen_with};

    let mut out = Vec::new();
    let big = BigUint::from;

    let setup = rmpf::setup();
    let q = setup.params().exp_modulus().clone();
    check(&mut out, "rmpf A1", mat_scalar_mul_mod(&big(rmpf::LAMBDA_A), setup.x(), &q).map(|m| m == rmpf::a1()));
    check(&mut out, "rmpf B1", mat_scalar_mul_mod(&big(rmpf::OMEGA_A), setup.y(), &q).map(|m| m == rmpf::b1()));
    check(&mut out, "rmpf A2", mat_scalar_mul_mod(&big(rmpf::LAMBDA_B), setup.x(), &q).map(|m| m == rmpf::a2()));
    check(&mut out, "rmpf B2", mat_scalar_mul_mod(&big(rmpf::OMEGA_B), setup.y(), &q).map(|m| m == rmpf::b2()));
    let alice = rmpf_keygen_with(&setup, big(rmpf::LAMBDA_A), big(rmpf::OMEGA_A));
    let bob = rmpf_keygen_with(&setup, big(rmpf::LAMBDA_B), big(rmpf::OMEGA_B));
    match (alice, bob) {
        (Ok((pa, ta)), Ok((pb, tb))) => {
            check(&mut out, "rmpf token A", Ok(ta.matrix() == &rmpf::token_a()));
            check(&mut out, "rmpf token B", Ok(tb.matrix() == &rmpf::token_b()));
            check(&mut out, "rmpf key A", rmpf_derive_key(&pa, &tb, &setup).map(|k| k == rmpf::key()));
            check(&mut out, "rmpf key B", rmpf_derive_key(&pb, &ta, &setup).map(|k| k == rmpf::key()));
        }
        (Err(e), _) | (_, Err(e)) => check(&mut out, "rmpf keygen", Err(e)),
    }

    let setup = rdmpf::setup();
    let q = setup.params().exp_modulus().clone();
    let rounds = rdmpf::rounds();
    for (r, round) in rounds.iter().enumerate() {
        let (rx, ry) = rdmpf::ALICE_EXPONENTS[r];
        let (ru, rv) = rdmpf::BOB_EXPONENTS[r];
        let n = r + 1;
        check(&mut out, &format!("rdmpf round {n} X"), mat_pow_mod(setup.base_xu(), &big(rx), &q).map(|m| m == round.x));
        check(&mut out, &format!("rdmpf round {n} Y"), mat_pow_mod(setup.base_yv(), &big(ry), &q).map(|m| m == round.y));
        check(&mut out, &format!("rdmpf round {n} U"), mat_pow_mod(setup.base_xu(), &big(ru), &q).map(|m| m == round.u));
        check(&mut out, &format!("rdmpf round {n} V"), mat_pow_mod(setup.base_yv(), &big(rv), &q).map(|m| m == round.v));
    }

    let alice = RdmpfParty::from_exponents(&setup, Role::Alice, &rdmpf::ALICE_EXPONENTS);
    let bob = RdmpfParty::from_exponents(&setup, Role::Bob, &rdmpf::BOB_EXPONENTS);
    let (alice, bob) = match (alice, bob) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            check(&mut out, "rdmpf keygen", Err(e));
            return out;
        }
    };
    for (r, round) in rounds.iter().enumerate() {
        let n = r + 1;
        check(&mut out, &format!("rdmpf round {n} token A"), Ok(alice.tokens()[r].matrix() == &round.token_a));
        check(&mut out, &format!("rdmpf round {n} token B"), Ok(bob.tokens()[r].matrix() == &round.token_b));
    }
    let a_list = alice.token_list();
    let b_list = bob.token_list();
    let ends = |l: &[BigUint], first: u64, last: u64| {
        l.len() == 50 && l.first() == Some(&big(first)) && l.last() == Some(&big(last))
    };
    check(&mut out, "rdmpf A token list ends", Ok(ends(&a_list, 53838, 19667)));
    check(&mut out, "rdmpf B token list ends", Ok(ends(&b_list, 29348, 13589)));

    match (alice.finish(&b_list), bob.finish(&a_list)) {
        (Ok(sa), Ok(sb)) => {
            for (r, round) in rounds.iter().enumerate() {
                let n = r + 1;
                check(&mut out, &format!("rdmpf round {n} key A"), Ok(sa.round_keys[r] == round.key));
                check(&mut out, &format!("rdmpf round {n} key B"), Ok(sb.round_keys[r] == round.key));
            }
            check(&mut out, "rdmpf A key list ends", Ok(ends(&sa.transcript.key_list, 20743, 12282)));
            check(&mut out, "rdmpf B key list ends", Ok(ends(&sb.transcript.key_list, 20743, 12282)));
            check(&mut out, "rdmpf session keys equal", Ok(sa.key == sb.key));
            check(&mut out, "rdmpf session key golden", Ok(sa.key.to_hex() == rdmpf::SESSION_KEY_HEX));
        }
        (Err(e), _) | (_, Err(e)) => check(&mut out, "rdmpf session", Err(e)),
    }
    out
}
