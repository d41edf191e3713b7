//! Dirichlet characters built from the cyclic decomposition of `(Z/qZ)^*`.
//!
//! Components are ordered with the 2-part first (the `-1` factor, then the
//! `5` factor for `2^k`, `k >= 3`), followed by the odd prime powers in
//! ascending order. A character is the exponent tuple `index` against the
//! generator list: `chi(g_c) = exp(2 pi i index_c / order_c)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::arith::{factorize, gcd, lcm, pow_mod, totient};
use crate::error::{Error, Result};

/// One cyclic factor of the unit group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitComponent {
    /// Prime-power modulus the generator lives in.
    pub modulus: u64,
    pub generator: u64,
    pub order: u64,
}

/// Generators and orders of `(Z/qZ)^*`; the product of the orders is `phi(q)`.
pub fn unit_group_structure(q: u64) -> Vec<UnitComponent> {
    assert!(q >= 1, "modulus must be positive");
    let mut out = Vec::new();
    let mut odd = Vec::new();
    for (p, k) in factorize(q) {
        let pk = p.pow(k);
        if p == 2 {
            match k {
                1 => {}
                2 => out.push(UnitComponent {
                    modulus: 4,
                    generator: 3,
                    order: 2,
                }),
                _ => {
                    out.push(UnitComponent {
                        modulus: pk,
                        generator: pk - 1,
                        order: 2,
                    });
                    out.push(UnitComponent {
                        modulus: pk,
                        generator: 5,
                        order: pk / 4,
                    });
                }
            }
        } else {
            let order = pk / p * (p - 1);
            odd.push(UnitComponent {
                modulus: pk,
                generator: smallest_primitive_root(p, pk, order),
                order,
            });
        }
    }
    odd.sort_by_key(|c| c.modulus);
    out.extend(odd);
    out
}

fn smallest_primitive_root(p: u64, pk: u64, order: u64) -> u64 {
    let mut prime_divisors: Vec<u64> = factorize(p - 1).into_iter().map(|(r, _)| r).collect();
    if pk != p {
        prime_divisors.push(p);
    }
    (2..pk)
        .find(|&g| g % p != 0 && prime_divisors.iter().all(|&r| pow_mod(g, order / r, pk) != 1))
        .expect("odd prime powers have primitive roots")
}

/// Discrete logarithms on one component, by table or baby-step/giant-step.
#[derive(Debug, Clone)]
enum DlogTable {
    /// `table[n mod m]` is the log of `n`; `u64::MAX` marks non-units.
    Dense(Vec<u64>),
    Bsgs,
}

const DENSE_DLOG_LIMIT: u64 = 1 << 22;
const VALUE_TABLE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    modulus: u64,
    components: Vec<UnitComponent>,
    index: Vec<u64>,
    /// Least common multiple of the component orders.
    order_lcm: u64,
    dlogs: Vec<DlogTable>,
    /// `values[n mod q]` when `q` is small enough to tabulate.
    values: Option<Vec<Complex64>>,
}

impl DirichletCharacter {
    /// Character mod `q` with the given exponent tuple (reduced mod each order).
    pub fn new(q: u64, index: &[u64]) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("character modulus must be positive".into()));
        }
        let components = unit_group_structure(q);
        if index.len() != components.len() {
            return Err(Error::Domain(format!(
                "character mod {q} needs {} index entries, got {}",
                components.len(),
                index.len()
            )));
        }
        let index: Vec<u64> = index.iter().zip(&components).map(|(e, c)| e % c.order).collect();
        let order_lcm = components.iter().fold(1, |acc, c| lcm(acc, c.order));
        let dlogs = components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.modulus <= DENSE_DLOG_LIMIT {
                    DlogTable::Dense(dense_dlog(c, two_part_role(&components, i)))
                } else {
                    DlogTable::Bsgs
                }
            })
            .collect();
        let mut chi = Self {
            modulus: q,
            components,
            index,
            order_lcm,
            dlogs,
            values: None,
        };
        if q <= VALUE_TABLE_LIMIT {
            let table = (0..q).map(|n| chi.eval_uncached(n)).collect();
            chi.values = Some(table);
        }
        Ok(chi)
    }

    pub fn principal(q: u64) -> Self {
        let n = unit_group_structure(q).len();
        Self::new(q, &vec![0; n]).expect("index length matches")
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn components(&self) -> &[UnitComponent] {
        &self.components
    }

    pub fn index(&self) -> &[u64] {
        &self.index
    }

    pub fn is_principal(&self) -> bool {
        self.index.iter().all(|&e| e == 0)
    }

    /// Order of the character as an element of the character group.
    pub fn order(&self) -> u64 {
        self.index
            .iter()
            .zip(&self.components)
            .fold(1, |acc, (&e, c)| lcm(acc, c.order / gcd(e, c.order)))
    }

    /// `chi(n)`; zero when `gcd(n, q) > 1`.
    pub fn eval(&self, n: i64) -> Complex64 {
        let r = n.rem_euclid(self.modulus as i64) as u64;
        match &self.values {
            Some(t) => t[r as usize],
            None => self.eval_uncached(r),
        }
    }

    #[inline]
    pub fn eval_u64(&self, n: u64) -> Complex64 {
        let r = n % self.modulus;
        match &self.values {
            Some(t) => t[r as usize],
            None => self.eval_uncached(r),
        }
    }

    /// `chi(n)` as an exponent `e` with `chi(n) = exp(2 pi i e / order_lcm)`,
    /// or `None` when `n` is not a unit.
    pub fn exponent(&self, n: u64) -> Option<u64> {
        if gcd(n % self.modulus, self.modulus) != 1 {
            return None;
        }
        let mut e = 0u64;
        for (i, c) in self.components.iter().enumerate() {
            let log = self.dlog(i, n % c.modulus);
            let scale = self.order_lcm / c.order;
            let term = (self.index[i] as u128 * log as u128 % c.order as u128) as u64 * scale;
            e = (e + term) % self.order_lcm;
        }
        Some(e)
    }

    fn eval_uncached(&self, n: u64) -> Complex64 {
        match self.exponent(n) {
            None => Complex64::new(0.0, 0.0),
            Some(e) => root_of_unity(e, self.order_lcm),
        }
    }

    fn dlog(&self, i: usize, n: u64) -> u64 {
        let c = &self.components[i];
        match &self.dlogs[i] {
            DlogTable::Dense(t) => t[n as usize],
            DlogTable::Bsgs => {
                let role = two_part_role(&self.components, i);
                let (base, target) = reduce_for_role(c, role, n);
                match role {
                    TwoPartRole::Sign => target,
                    _ => bsgs(base, target, c.modulus, c.order),
                }
            }
        }
    }

    /// Smallest `f | q` such that the character is induced from one mod `f`.
    pub fn conductor(&self) -> u64 {
        let mut f = 1u64;
        let mut i = 0;
        while i < self.components.len() {
            let c = &self.components[i];
            if c.modulus.is_multiple_of(2) {
                if c.modulus == 4 {
                    if self.index[i] != 0 {
                        f *= 4;
                    }
                    i += 1;
                } else {
                    // (-1, 5) pair for 2^k, k >= 3.
                    let k = c.modulus.trailing_zeros() as u64;
                    let sign = self.index[i];
                    let b = self.index[i + 1];
                    if b != 0 {
                        let j = k - b.trailing_zeros() as u64;
                        f *= 1 << j;
                    } else if sign != 0 {
                        f *= 4;
                    }
                    i += 2;
                }
            } else {
                let e = self.index[i];
                if e != 0 {
                    let (p, k) = factorize(c.modulus)[0];
                    // Smallest j >= 1 with p^(k-j) | e.
                    let mut j = 1;
                    while !e.is_multiple_of(p.pow(k - j)) {
                        j += 1;
                    }
                    f *= p.pow(j);
                }
                i += 1;
            }
        }
        f
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.index == other.index
    }
}

/// `q=<Q>,index=<e1.e2...>`; the index tuple is empty when `(Z/qZ)^*` is trivial.
impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.index.iter().map(u64::to_string).collect();
        write!(f, "q={},index={}", self.modulus, idx.join("."))
    }
}

impl FromStr for DirichletCharacter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::parse("character", s, reason);
        let mut q = None;
        let mut index = None;
        for part in s.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match key.trim() {
                "q" => {
                    let v: u64 = value
                        .trim()
                        .parse()
                        .map_err(|_| bad("modulus is not a positive integer"))?;
                    if v == 0 {
                        return Err(bad("modulus must be positive"));
                    }
                    q = Some(v);
                }
                "index" => {
                    let v = value.trim();
                    let tuple = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split('.')
                            .map(|e| e.parse::<u64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad("index entries must be nonnegative integers"))?
                    };
                    index = Some(tuple);
                }
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        let q = q.ok_or_else(|| bad("missing q"))?;
        let components = unit_group_structure(q);
        let index = match index {
            Some(i) => i,
            None => vec![0; components.len()],
        };
        if index.len() != components.len() {
            return Err(bad(&format!(
                "modulus {q} has {} unit-group components, index has {} entries",
                components.len(),
                index.len()
            )));
        }
        DirichletCharacter::new(q, &index)
    }
}

/// Exact values at the quarter turns, `exp(2 pi i e / n)` elsewhere.
pub(crate) fn root_of_unity(e: u64, n: u64) -> Complex64 {
    let e = e % n;
    if e == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if (4 * e).is_multiple_of(n) {
        return match 4 * e / n {
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = std::f64::consts::TAU * (e as f64 / n as f64);
    Complex64::new(theta.cos(), theta.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TwoPartRole {
    Odd,
    /// The `-1` factor (also the whole group mod 4).
    Sign,
    /// The `5` factor mod `2^k`.
    Five,
}

fn two_part_role(components: &[UnitComponent], i: usize) -> TwoPartRole {
    let c = &components[i];
    if c.modulus % 2 == 1 {
        TwoPartRole::Odd
    } else if c.generator == 5 && c.modulus >= 8 {
        TwoPartRole::Five
    } else {
        TwoPartRole::Sign
    }
}

/// For the 2-part, `n = (-1)^a 5^b`; `Sign` returns `a` directly, `Five`
/// returns `(5, n * (-1)^a)` so the remaining log is base 5.
fn reduce_for_role(c: &UnitComponent, role: TwoPartRole, n: u64) -> (u64, u64) {
    match role {
        TwoPartRole::Odd => (c.generator, n),
        TwoPartRole::Sign => (0, u64::from(n % 4 == 3)),
        TwoPartRole::Five => {
            let m = if n % 4 == 3 { c.modulus - n } else { n };
            (5, m)
        }
    }
}

fn dense_dlog(c: &UnitComponent, role: TwoPartRole) -> Vec<u64> {
    let m = c.modulus;
    let mut table = vec![u64::MAX; m as usize];
    match role {
        TwoPartRole::Sign => {
            for n in (1..m).step_by(2) {
                table[n as usize] = u64::from(n % 4 == 3);
            }
        }
        TwoPartRole::Odd | TwoPartRole::Five => {
            let mut x = 1u64;
            for k in 0..c.order {
                table[x as usize] = k;
                if role == TwoPartRole::Five {
                    table[(m - x) as usize] = k;
                }
                x = x * c.generator % m;
            }
        }
    }
    table
}

fn bsgs(base: u64, target: u64, m: u64, order: u64) -> u64 {
    use std::collections::HashMap;
    let step = crate::arith::isqrt(order) + 1;
    let mut baby = HashMap::with_capacity(step as usize);
    let mut x = 1u64;
    for j in 0..step {
        baby.entry(x).or_insert(j);
        x = crate::arith::mul_mod(x, base, m);
    }
    // base^(-step)
    let giant = pow_mod(base, order - step % order, m);
    let mut y = target % m;
    for i in 0..=step {
        if let Some(&j) = baby.get(&y) {
            return (i * step + j) % order;
        }
        y = crate::arith::mul_mod(y, giant, m);
    }
    unreachable!("target is in the subgroup generated by the base")
}

/// Number of characters mod `q`, i.e. the classical totient.
pub fn character_count(q: u64) -> u64 {
    totient(q)
}

/// Every character mod `q`, in lexicographic order of the index tuple.
pub fn all_characters(q: u64) -> Vec<DirichletCharacter> {
    let comps = unit_group_structure(q);
    let mut out = Vec::new();
    let mut idx = vec![0u64; comps.len()];
    loop {
        out.push(DirichletCharacter::new(q, &idx).expect("valid index"));
        let mut pos = comps.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < comps[pos].order {
                break;
            }
            idx[pos] = 0;
        }
    }
}
