//! Multi-access coded caching parameters, cyclic index arithmetic and the
//! uncoded cyclic placement.
//!
//! All MACC-level indices (files, caches, users, subfiles) are 1-based, as in
//! the usual notation for this problem: `K` caches and `K` users on a ring,
//! user `j` reads caches `j, j+1, ..., j+L-1` with wrap-around.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};

/// Maps `n` into `{1, ..., m}`: the ordinary residue, except that multiples of
/// `m` map to `m` instead of `0`. Negative `n` is normalized first.
pub fn mod1(n: i64, m: usize) -> usize {
    assert!(m >= 1, "mod1 needs a positive modulus");
    let r = n.rem_euclid(m as i64) as usize;
    if r == 0 {
        m
    } else {
        r
    }
}

/// The cyclically consecutive run `n, n+1, ..., m` over `{1, ..., k}`.
pub fn circ_interval(n: usize, m: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || n == 0 || m == 0 || n > k || m > k {
        return Err(invalid(format!(
            "interval endpoints ({n}, {m}) outside [1, {k}]"
        )));
    }
    let len = if n <= m { m - n + 1 } else { k - n + 1 + m };
    Ok((0..len).map(|off| mod1((n + off) as i64, k)).collect())
}

/// Problem parameters of a multi-access coded caching instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaccInstance {
    n_files: usize,
    n_caches_users: usize,
    access_degree: usize,
    memory_index: usize,
}

impl MaccInstance {
    pub fn new(
        n_files: usize,
        n_caches_users: usize,
        access_degree: usize,
        memory_index: usize,
    ) -> Result<Self> {
        if n_files == 0 {
            return Err(invalid("need at least one file"));
        }
        if n_caches_users == 0 {
            return Err(invalid("need at least one cache"));
        }
        if access_degree == 0 || access_degree > n_caches_users {
            return Err(invalid(format!(
                "access degree L={access_degree} must lie in [1, K={n_caches_users}]"
            )));
        }
        let ceil = n_caches_users.div_ceil(access_degree);
        if memory_index > ceil {
            return Err(invalid(format!(
                "memory index i={memory_index} exceeds ceil(K/L)={ceil}"
            )));
        }
        Ok(Self {
            n_files,
            n_caches_users,
            access_degree,
            memory_index,
        })
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    /// Number of caches, which is also the number of users.
    pub fn k(&self) -> usize {
        self.n_caches_users
    }

    pub fn l(&self) -> usize {
        self.access_degree
    }

    pub fn i(&self) -> usize {
        self.memory_index
    }

    /// Number of subfiles of each file a user can read from its caches (`iL`,
    /// saturating at `K`).
    pub fn coverage(&self) -> usize {
        (self.memory_index * self.access_degree).min(self.n_caches_users)
    }

    /// Subfiles each user still needs, `K - iL` (zero at full memory).
    pub fn n_needed(&self) -> usize {
        self.n_caches_users - self.coverage()
    }

    pub fn max_interior_index(&self) -> usize {
        self.n_caches_users / self.access_degree
    }

    /// Cache memory `M = iN/K` in file units.
    pub fn memory(&self) -> Ratio<i64> {
        Ratio::new(
            (self.memory_index * self.n_files) as i64,
            self.n_caches_users as i64,
        )
    }

    /// True when every user already sees every subfile (`iL >= K`), including
    /// the `i = ceil(K/L)` corner when `L` does not divide `K`.
    pub fn is_full_memory(&self) -> bool {
        self.memory_index * self.access_degree >= self.n_caches_users
    }

    /// First user of the circular run of users that can read subfile `m`.
    pub fn interval_start(&self, subfile: usize) -> usize {
        mod1(
            subfile as i64 - self.access_degree as i64 + 1,
            self.n_caches_users,
        )
    }

    /// Inverse of [`Self::interval_start`].
    pub fn subfile_for_interval(&self, start: usize) -> usize {
        mod1(
            start as i64 + self.access_degree as i64 - 1,
            self.n_caches_users,
        )
    }

    fn check_user(&self, user: usize) -> Result<()> {
        if user == 0 || user > self.n_caches_users {
            return Err(invalid(format!(
                "user {user} outside [1, {}]",
                self.n_caches_users
            )));
        }
        Ok(())
    }
}

/// The file requested by each user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandProfile {
    demands: Vec<usize>,
}

impl DemandProfile {
    pub fn new(instance: &MaccInstance, demands: Vec<usize>) -> Result<Self> {
        if demands.len() != instance.k() {
            return Err(invalid(format!(
                "expected {} demands, got {}",
                instance.k(),
                demands.len()
            )));
        }
        if let Some(bad) = demands.iter().find(|&&d| d == 0 || d > instance.n_files()) {
            return Err(invalid(format!(
                "demanded file {bad} outside [1, {}]",
                instance.n_files()
            )));
        }
        Ok(Self { demands })
    }

    /// User `j` requests file `<j>_N`; all demands are distinct when `N >= K`.
    pub fn worst_case(instance: &MaccInstance) -> Self {
        let demands = (1..=instance.k())
            .map(|j| mod1(j as i64, instance.n_files()))
            .collect();
        Self { demands }
    }

    /// File requested by user `user` (1-based).
    pub fn file(&self, user: usize) -> usize {
        self.demands[user - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.demands
    }

    pub fn is_distinct(&self) -> bool {
        let set: BTreeSet<_> = self.demands.iter().collect();
        set.len() == self.demands.len()
    }
}

/// Result of the cyclic placement: which subfile indices each cache holds
/// (the same pattern for every file) and which users can read each subfile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementMap {
    k: usize,
    cache_contents: Vec<BTreeSet<usize>>,
    subfile_users: Vec<Vec<usize>>,
}

impl PlacementMap {
    /// Subfile indices stored in cache `k` (1-based).
    pub fn cache(&self, k: usize) -> &BTreeSet<usize> {
        &self.cache_contents[k - 1]
    }

    /// Users, in circular order, that can read subfile `m` (1-based).
    pub fn users_of(&self, m: usize) -> &[usize] {
        &self.subfile_users[m - 1]
    }

    pub fn n_caches(&self) -> usize {
        self.k
    }
}

/// Places subfile `m` of every file in caches `m, m+L, ..., m+(i-1)L`.
pub fn place(instance: &MaccInstance) -> Result<PlacementMap> {
    let (k, l, i) = (instance.k(), instance.l(), instance.i());
    if i == 0 {
        return Err(precondition("placement needs memory index i >= 1"));
    }
    if i > instance.max_interior_index() {
        return Err(precondition(format!(
            "memory index i={i} exceeds floor(K/L)={}; the full-memory corner needs no placement",
            instance.max_interior_index()
        )));
    }
    let cache_contents = (1..=k)
        .map(|cache| {
            (1..=i)
                .map(|r| mod1(cache as i64 - ((r - 1) * l) as i64, k))
                .collect()
        })
        .collect();
    let subfile_users = (1..=k)
        .map(|m| {
            let first = instance.interval_start(m);
            let last = mod1((m + (i - 1) * l) as i64, k);
            circ_interval(first, last, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlacementMap {
        k,
        cache_contents,
        subfile_users,
    })
}

/// Subfile indices user `user` can read through its `L` caches.
pub fn accessible_subfiles(instance: &MaccInstance, user: usize) -> Result<BTreeSet<usize>> {
    instance.check_user(user)?;
    let (k, l) = (instance.k(), instance.l());
    let mut out = BTreeSet::new();
    for r in 1..=instance.i() {
        for a in 1..=l {
            out.insert(mod1((user + a - 1) as i64 - ((r - 1) * l) as i64, k));
        }
    }
    Ok(out)
}

/// Subfile indices user `user` still needs (complement of
/// [`accessible_subfiles`]).
pub fn needed_subfiles(instance: &MaccInstance, user: usize) -> Result<BTreeSet<usize>> {
    let have = accessible_subfiles(instance, user)?;
    Ok((1..=instance.k()).filter(|m| !have.contains(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod1_examples() {
        assert_eq!(mod1(8, 3), 2);
        assert_eq!(mod1(6, 3), 3);
        assert_eq!(mod1(14, 7), 7);
        assert_eq!(mod1(0, 5), 5);
        assert_eq!(mod1(-1, 8), 7);
        assert_eq!(mod1(-8, 8), 8);
    }

    #[test]
    fn circ_interval_examples() {
        assert_eq!(circ_interval(2, 7, 8).unwrap(), vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(circ_interval(7, 1, 8).unwrap(), vec![7, 8, 1]);
        assert_eq!(circ_interval(3, 3, 8).unwrap(), vec![3]);
        assert!(circ_interval(0, 3, 8).is_err());
        assert!(circ_interval(2, 9, 8).is_err());
    }

    #[test]
    fn instance_validation() {
        assert!(MaccInstance::new(8, 8, 2, 3).is_ok());
        assert!(MaccInstance::new(8, 8, 2, 4).is_ok());
        assert!(MaccInstance::new(8, 8, 2, 5).is_err());
        assert!(MaccInstance::new(8, 8, 0, 1).is_err());
        assert!(MaccInstance::new(8, 8, 9, 1).is_err());
        assert!(MaccInstance::new(0, 8, 2, 1).is_err());
        // ceil(7/2) = 4 is the full-memory corner
        let corner = MaccInstance::new(7, 7, 2, 4).unwrap();
        assert!(corner.is_full_memory());
        assert_eq!(corner.n_needed(), 0);
        assert!(place(&corner).is_err());
    }

    #[test]
    fn placement_k8_l2_i3() {
        let inst = MaccInstance::new(8, 8, 2, 3).unwrap();
        let p = place(&inst).unwrap();
        for k in 1..=8usize {
            let expect: BTreeSet<_> = [k, mod1(k as i64 - 2, 8), mod1(k as i64 - 4, 8)].into();
            assert_eq!(p.cache(k), &expect);
        }
        for m in 1..=8usize {
            let expect = circ_interval(mod1(m as i64 - 1, 8), mod1(m as i64 + 4, 8), 8).unwrap();
            assert_eq!(p.users_of(m), expect.as_slice());
        }
    }

    #[test]
    fn placement_k6_l2_i1() {
        let inst = MaccInstance::new(6, 6, 2, 1).unwrap();
        let p = place(&inst).unwrap();
        for m in 1..=6usize {
            assert_eq!(p.cache(m), &BTreeSet::from([m]));
            assert_eq!(p.users_of(m), &[mod1(m as i64 - 1, 6), m]);
        }
    }

    #[test]
    fn placement_classical_l1() {
        let inst = MaccInstance::new(4, 4, 1, 1).unwrap();
        let p = place(&inst).unwrap();
        for m in 1..=4usize {
            assert_eq!(p.cache(m), &BTreeSet::from([m]));
            assert_eq!(p.users_of(m), &[m]);
        }
    }

    #[test]
    fn accessible_examples() {
        let inst = MaccInstance::new(8, 8, 2, 3).unwrap();
        assert_eq!(
            accessible_subfiles(&inst, 1).unwrap(),
            BTreeSet::from([1, 2, 5, 6, 7, 8])
        );
        assert_eq!(needed_subfiles(&inst, 1).unwrap(), BTreeSet::from([3, 4]));
        let classical = MaccInstance::new(4, 4, 1, 1).unwrap();
        assert_eq!(
            accessible_subfiles(&classical, 2).unwrap(),
            BTreeSet::from([2])
        );
        let full = MaccInstance::new(6, 6, 2, 3).unwrap();
        assert_eq!(accessible_subfiles(&full, 4).unwrap().len(), 6);
        assert!(accessible_subfiles(&inst, 9).is_err());
    }

    #[test]
    fn needed_subfiles_match_interval_bijection() {
        // Subfile 3 <-> users [2:7], subfile 4 <-> users [3:8] for (8, 2, 3).
        let inst = MaccInstance::new(8, 8, 2, 3).unwrap();
        assert_eq!(inst.interval_start(3), 2);
        assert_eq!(inst.interval_start(4), 3);
        assert_eq!(inst.subfile_for_interval(2), 3);
    }

    #[test]
    fn placement_invariants_sweep() {
        for k in 1..=16usize {
            for l in 1..=k {
                for i in 1..=k / l {
                    let inst = MaccInstance::new(k, k, l, i).unwrap();
                    let p = place(&inst).unwrap();
                    let il = i * l;
                    let mut cache_sets = BTreeSet::new();
                    let mut user_sets = BTreeSet::new();
                    for c in 1..=k {
                        assert_eq!(p.cache(c).len(), i, "memory constraint");
                        cache_sets.insert(p.cache(c).clone());
                    }
                    for m in 1..=k {
                        assert_eq!(p.users_of(m).len(), il);
                        user_sets.insert(p.users_of(m).to_vec());
                        assert_eq!(inst.subfile_for_interval(inst.interval_start(m)), m);
                    }
                    if il < k {
                        assert_eq!(cache_sets.len(), k);
                        assert_eq!(user_sets.len(), k);
                    }
                    for j in 1..=k {
                        let acc = accessible_subfiles(&inst, j).unwrap();
                        assert_eq!(acc.len(), il.min(k));
                        // accessibility agrees with the placement's user runs
                        for m in 1..=k {
                            assert_eq!(acc.contains(&m), p.users_of(m).contains(&j));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn memory_in_file_units() {
        let inst = MaccInstance::new(8, 8, 2, 3).unwrap();
        assert_eq!(inst.memory(), Ratio::from_integer(3));
        let inst = MaccInstance::new(5, 10, 2, 3).unwrap();
        assert_eq!(inst.memory(), Ratio::new(3, 2));
    }

    #[test]
    fn demand_validation() {
        let inst = MaccInstance::new(3, 4, 1, 1).unwrap();
        assert!(DemandProfile::new(&inst, vec![1, 2, 3]).is_err());
        assert!(DemandProfile::new(&inst, vec![1, 2, 3, 4]).is_err());
        let d = DemandProfile::new(&inst, vec![1, 2, 3, 1]).unwrap();
        assert!(!d.is_distinct());
        assert_eq!(DemandProfile::worst_case(&inst).as_slice(), &[1, 2, 3, 1]);
    }
}
