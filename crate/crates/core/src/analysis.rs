//! Aggregation of scan logs into reports.
//!
//! Domain-level figures use the first observation of each domain name;
//! later observations only feed the record-set change events and the
//! per-line status counts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::dns::{DnsLookupResult, Outcome};
use crate::pipeline::{DomainScanResult, ScanStatus};
use crate::sshfp::{match_record, HashType, HostKey, KeyAlgo, SshfpRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchCategory {
    Full,
    Partial,
    None,
}

/// Matched records over published records, kept unreduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchClass {
    pub matched: u64,
    pub total: u64,
    pub class: MatchCategory,
}

impl MatchClass {
    pub fn new(matched: u64, total: u64) -> Self {
        let class = if total > 0 && matched == total {
            MatchCategory::Full
        } else if matched == 0 {
            MatchCategory::None
        } else {
            MatchCategory::Partial
        };
        MatchClass {
            matched,
            total,
            class,
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    /// `p/q` in lowest terms.
    pub fn reduced(&self) -> String {
        if self.total == 0 {
            return "0/0".into();
        }
        let g = gcd(self.matched, self.total);
        format!("{}/{}", self.matched / g, self.total / g)
    }

    /// Decile bin; a ratio of exactly 1 falls in the last bin.
    pub fn bin(&self) -> usize {
        if self.total == 0 {
            return 0;
        }
        ((self.matched * 10 / self.total) as usize).min(9)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Share of the (distinct) records matched by at least one key.
pub fn classify_domain_match(records: &[SshfpRecord], keys: &[HostKey]) -> MatchClass {
    let distinct: BTreeSet<&SshfpRecord> = records.iter().collect();
    let matched = distinct
        .iter()
        .filter(|r| keys.iter().any(|k| match_record(r, k).matched()))
        .count();
    MatchClass::new(matched as u64, distinct.len() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DnssecStatus {
    Secure,
    Insecure,
    Bogus,
    Unknown,
}

impl DnssecStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DnssecStatus::Secure => "SECURE",
            DnssecStatus::Insecure => "INSECURE",
            DnssecStatus::Bogus => "BOGUS",
            DnssecStatus::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for DnssecStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn dnssec_status(plain: &DnsLookupResult, validating: &DnsLookupResult) -> DnssecStatus {
    match validating.outcome {
        Outcome::NoError if validating.ad_flag => DnssecStatus::Secure,
        Outcome::NoError => DnssecStatus::Insecure,
        Outcome::ServFail if plain.outcome == Outcome::NoError => DnssecStatus::Bogus,
        _ => DnssecStatus::Unknown,
    }
}

/// DNSSEC status of a logged domain; `Unknown` when either lookup is missing.
pub fn result_dnssec_status(r: &DomainScanResult) -> DnssecStatus {
    match (&r.sshfp_lookup, &r.validating_lookup) {
        (Some(p), Some(v)) => dnssec_status(p, v),
        _ => DnssecStatus::Unknown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChangeEvent {
    Unchanged,
    FullReplacement,
    PartialRemoval,
    PartialReplacement,
    Addition,
}

impl ChangeEvent {
    /// The class of the same pair with arguments swapped.
    pub fn reversed(self) -> Self {
        match self {
            ChangeEvent::PartialRemoval => ChangeEvent::Addition,
            ChangeEvent::Addition => ChangeEvent::PartialRemoval,
            other => other,
        }
    }
}

pub fn diff_record_sets(old: &BTreeSet<SshfpRecord>, new: &BTreeSet<SshfpRecord>) -> ChangeEvent {
    if old == new {
        ChangeEvent::Unchanged
    } else if !old.is_empty() && !new.is_empty() && old.is_disjoint(new) {
        ChangeEvent::FullReplacement
    } else if new.is_subset(old) {
        ChangeEvent::PartialRemoval
    } else if old.is_subset(new) {
        ChangeEvent::Addition
    } else {
        ChangeEvent::PartialReplacement
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintCluster {
    pub hash_type: HashType,
    pub fingerprint: String,
    pub domains: Vec<String>,
}

/// Domains sharing a published fingerprint, per hash type. Only clusters of
/// two or more domains; largest first, ties by hash type and fingerprint.
pub fn duplicate_fingerprint_clusters<'a>(
    log: impl IntoIterator<Item = &'a DomainScanResult>,
) -> Vec<FingerprintCluster> {
    let mut groups: BTreeMap<(HashType, Vec<u8>), BTreeSet<String>> = BTreeMap::new();
    for r in log {
        for p in &r.records {
            groups
                .entry((p.record.hash_type, p.record.fingerprint.clone()))
                .or_default()
                .insert(r.domain.clone());
        }
    }
    let mut out: Vec<FingerprintCluster> = groups
        .into_iter()
        .filter(|(_, d)| d.len() >= 2)
        .map(|((hash_type, fp), domains)| FingerprintCluster {
            hash_type,
            fingerprint: hex::encode(fp),
            domains: domains.into_iter().collect(),
        })
        .collect();
    out.sort_by_key(|c| std::cmp::Reverse(c.domains.len()));
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyAlgoCounts {
    pub reserved: u64,
    pub rsa: u64,
    pub dsa: u64,
    pub ecdsa: u64,
    pub ed25519: u64,
    pub ed448: u64,
    pub unassigned: u64,
}

impl KeyAlgoCounts {
    fn add(&mut self, algo: KeyAlgo) {
        *match algo {
            KeyAlgo::RESERVED => &mut self.reserved,
            KeyAlgo::RSA => &mut self.rsa,
            KeyAlgo::DSA => &mut self.dsa,
            KeyAlgo::ECDSA => &mut self.ecdsa,
            KeyAlgo::ED25519 => &mut self.ed25519,
            KeyAlgo::ED448 => &mut self.ed448,
            _ => &mut self.unassigned,
        } += 1;
    }

    pub fn rows(&self) -> [(&'static str, u64); 7] {
        [
            ("RESERVED (0)", self.reserved),
            ("RSA (1)", self.rsa),
            ("DSA (2)", self.dsa),
            ("ECDSA (3)", self.ecdsa),
            ("Ed25519 (4)", self.ed25519),
            ("Ed448 (6)", self.ed448),
            ("unassigned", self.unassigned),
        ]
    }

    pub fn total(&self) -> u64 {
        self.rows().iter().map(|r| r.1).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashTypeCounts {
    pub reserved: u64,
    pub sha1: u64,
    pub sha256: u64,
    pub unassigned: u64,
}

impl HashTypeCounts {
    fn add(&mut self, h: HashType) {
        *match h {
            HashType::RESERVED => &mut self.reserved,
            HashType::SHA1 => &mut self.sha1,
            HashType::SHA256 => &mut self.sha256,
            _ => &mut self.unassigned,
        } += 1;
    }

    pub fn rows(&self) -> [(&'static str, u64); 4] {
        [
            ("RESERVED (0)", self.reserved),
            ("SHA-1 (1)", self.sha1),
            ("SHA-256 (2)", self.sha256),
            ("unassigned", self.unassigned),
        ]
    }

    pub fn total(&self) -> u64 {
        self.rows().iter().map(|r| r.1).sum()
    }
}

/// KEY-ALGO and HASH-TYPE distribution of one population of fingerprints.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub key_algo: KeyAlgoCounts,
    pub hash_type: HashTypeCounts,
}

impl Histogram {
    pub fn add(&mut self, algo: KeyAlgo, hash: HashType) {
        self.key_algo.add(algo);
        self.hash_type.add(hash);
    }

    pub fn total(&self) -> u64 {
        self.key_algo.total()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histograms {
    /// Decodable records published in DNS.
    pub dns: Histogram,
    /// Fingerprints of collected host keys, one per supported hash type.
    pub ssh: Histogram,
    pub matching: Histogram,
    pub mismatching: Histogram,
}

impl Histograms {
    /// matching + mismatching = SSH, column by column.
    pub fn reconciles(&self) -> bool {
        let ka = |h: &Histogram| h.key_algo.rows().map(|r| r.1);
        let ht = |h: &Histogram| h.hash_type.rows().map(|r| r.1);
        let sum_ok =
            |a: &[u64], b: &[u64], c: &[u64]| a.iter().zip(b).zip(c).all(|((x, y), z)| x + y == *z);
        sum_ok(&ka(&self.matching), &ka(&self.mismatching), &ka(&self.ssh))
            && sum_ok(&ht(&self.matching), &ht(&self.mismatching), &ht(&self.ssh))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    /// Distinct domain names among logged lines.
    pub domains: u64,
    /// Domains whose SSHFP lookup returned at least one record.
    pub domains_with_records: u64,
    pub records: u64,
    pub valid_records: u64,
    pub invalid_records: u64,
    /// Answer records of type SSHFP whose RDATA could not be decoded.
    pub undecodable_records: u64,
    /// Domains for which a keyscan was attempted.
    pub keyscanned_domains: u64,
    /// Keyscanned domains that presented at least one host key.
    pub domains_with_keys: u64,
    /// (domain, address) pairs scanned.
    pub hosts: u64,
    pub hosts_with_keys: u64,
    /// (domain, address, key) triples.
    pub host_keys: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub full: u64,
    pub partial: u64,
    pub none: u64,
    /// Keyscanned domains that presented no host key at all.
    pub no_ssh: u64,
    /// Domains where at least one record matched.
    pub matching_domains: u64,
    /// Count per reduced ratio `p/q`.
    pub ratios: BTreeMap<String, u64>,
    /// Ratio deciles `[0, 0.1)`, ..., `[0.9, 1]`.
    pub deciles: [u64; 10],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnssecSplit {
    pub secure: u64,
    pub insecure: u64,
    pub bogus: u64,
    pub unknown: u64,
}

impl DnssecSplit {
    fn add(&mut self, s: DnssecStatus, n: u64) {
        *match s {
            DnssecStatus::Secure => &mut self.secure,
            DnssecStatus::Insecure => &mut self.insecure,
            DnssecStatus::Bogus => &mut self.bogus,
            DnssecStatus::Unknown => &mut self.unknown,
        } += n;
    }

    pub fn get(&self, s: DnssecStatus) -> u64 {
        match s {
            DnssecStatus::Secure => self.secure,
            DnssecStatus::Insecure => self.insecure,
            DnssecStatus::Bogus => self.bogus,
            DnssecStatus::Unknown => self.unknown,
        }
    }

    pub fn total(&self) -> u64 {
        self.secure + self.insecure + self.bogus + self.unknown
    }
}

/// DNSSEC status over keyscanned domains.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnssecReport {
    /// Valid records.
    pub records: DnssecSplit,
    /// One per domain.
    pub record_sets: DnssecSplit,
    /// Domains with at least one matching record.
    pub matching_domains: DnssecSplit,
    /// (domain, address) pairs presenting at least one key.
    pub hosts: DnssecSplit,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLog {
    pub counts: BTreeMap<ChangeEvent, u64>,
    /// Every change other than `UNCHANGED`, in log order.
    pub events: Vec<RecordSetChange>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSetChange {
    pub domain: String,
    pub event: ChangeEvent,
    pub removed: Vec<SshfpRecord>,
    pub added: Vec<SshfpRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedRecordSets {
    /// Record sets published by two or more domains.
    pub sets: u64,
    /// Domains publishing such a set.
    pub domains: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lines: u64,
    pub schema_errors: u64,
    /// Per status over all lines, repeated observations included.
    pub status_counts: BTreeMap<ScanStatus, u64>,
    /// SSHFP lookup outcome per domain.
    pub sshfp_outcomes: BTreeMap<Outcome, u64>,
    pub population: Population,
    pub histograms: Histograms,
    pub match_classes: MatchSummary,
    pub dnssec: DnssecReport,
    /// Domains meeting every condition: a matching record and a SECURE
    /// record set.
    pub secure_matching_domains: u64,
    pub duplicate_clusters: Vec<FingerprintCluster>,
    pub shared_record_sets: SharedRecordSets,
    pub changes: ChangeLog,
}

impl ScanReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Streaming fold over one or more logs, in order.
#[derive(Debug, Default)]
pub struct Aggregator {
    report: ScanReport,
    seen: HashSet<String>,
    firsts: Vec<DomainScanResult>,
    last_sets: HashMap<String, BTreeSet<SshfpRecord>>,
}

impl Aggregator {
    pub fn new() -> Self {
        Aggregator::default()
    }

    pub fn add_schema_error(&mut self) {
        self.report.schema_errors += 1;
    }

    pub fn add(&mut self, r: DomainScanResult) {
        self.report.lines += 1;
        *self.report.status_counts.entry(r.status).or_insert(0) += 1;
        self.track_changes(&r);
        if self.seen.insert(r.domain.clone()) {
            self.first_observation(&r);
            self.firsts.push(r);
        }
    }

    fn track_changes(&mut self, r: &DomainScanResult) {
        let answered = r
            .sshfp_lookup
            .as_ref()
            .is_some_and(|l| l.outcome == Outcome::NoError);
        if !answered {
            return;
        }
        let set: BTreeSet<SshfpRecord> = r.records.iter().map(|p| p.record.clone()).collect();
        if let Some(old) = self.last_sets.get(&r.domain) {
            let event = diff_record_sets(old, &set);
            *self.report.changes.counts.entry(event).or_insert(0) += 1;
            if event != ChangeEvent::Unchanged {
                self.report.changes.events.push(RecordSetChange {
                    domain: r.domain.clone(),
                    event,
                    removed: old.difference(&set).cloned().collect(),
                    added: set.difference(old).cloned().collect(),
                });
            }
        }
        self.last_sets.insert(r.domain.clone(), set);
    }

    fn first_observation(&mut self, r: &DomainScanResult) {
        let rep = &mut self.report;
        let pop = &mut rep.population;
        pop.domains += 1;
        if let Some(l) = &r.sshfp_lookup {
            *rep.sshfp_outcomes.entry(l.outcome).or_insert(0) += 1;
            pop.undecodable_records += l.malformed_count() as u64;
        }
        if !r.records.is_empty() {
            pop.domains_with_records += 1;
        }
        for p in &r.records {
            pop.records += 1;
            if p.record.is_valid() {
                pop.valid_records += 1;
            } else {
                pop.invalid_records += 1;
            }
            rep.histograms
                .dns
                .add(p.record.key_algo, p.record.hash_type);
        }
        if !r.keyscan_attempted() {
            return;
        }

        pop.keyscanned_domains += 1;
        let valid: Vec<SshfpRecord> = r.valid_records().cloned().collect();
        let status = result_dnssec_status(r);
        let keys: Vec<HostKey> = r.host_keys().into_iter().cloned().collect();

        for scan in &r.keyscans {
            pop.hosts += 1;
            if !scan.keys.is_empty() {
                pop.hosts_with_keys += 1;
                rep.dnssec.hosts.add(status, 1);
            }
            for k in &scan.keys {
                pop.host_keys += 1;
                let algo = k.key.key_algo().unwrap_or(KeyAlgo::from_code(255));
                for h in HashType::ALL {
                    let matched = valid
                        .iter()
                        .any(|rec| rec.hash_type == h && match_record(rec, &k.key).matched());
                    rep.histograms.ssh.add(algo, h);
                    if matched {
                        rep.histograms.matching.add(algo, h);
                    } else {
                        rep.histograms.mismatching.add(algo, h);
                    }
                }
            }
        }

        rep.dnssec.records.add(status, valid.len() as u64);
        rep.dnssec.record_sets.add(status, 1);
        if keys.is_empty() {
            rep.match_classes.no_ssh += 1;
            return;
        }
        pop.domains_with_keys += 1;
        let class = classify_domain_match(&valid, &keys);
        let mc = &mut rep.match_classes;
        match class.class {
            MatchCategory::Full => mc.full += 1,
            MatchCategory::Partial => mc.partial += 1,
            MatchCategory::None => mc.none += 1,
        }
        *mc.ratios.entry(class.reduced()).or_insert(0) += 1;
        mc.deciles[class.bin()] += 1;
        if class.matched > 0 {
            mc.matching_domains += 1;
            rep.dnssec.matching_domains.add(status, 1);
            if status == DnssecStatus::Secure {
                rep.secure_matching_domains += 1;
            }
        }
    }

    pub fn finish(mut self) -> ScanReport {
        self.report.duplicate_clusters = duplicate_fingerprint_clusters(&self.firsts);
        let mut sets: BTreeMap<BTreeSet<&SshfpRecord>, u64> = BTreeMap::new();
        for r in &self.firsts {
            if !r.records.is_empty() {
                *sets
                    .entry(r.records.iter().map(|p| &p.record).collect())
                    .or_insert(0) += 1;
            }
        }
        for n in sets.values().filter(|n| **n >= 2) {
            self.report.shared_record_sets.sets += 1;
            self.report.shared_record_sets.domains += n;
        }
        self.report
    }
}

/// Builds a report from decoded log lines. Undecodable lines are counted
/// and skipped.
pub fn aggregate_stats<E>(
    log: impl IntoIterator<Item = Result<DomainScanResult, E>>,
) -> ScanReport {
    let mut agg = Aggregator::new();
    for line in log {
        match line {
            Ok(r) => agg.add(r),
            Err(_) => agg.add_schema_error(),
        }
    }
    agg.finish()
}

/// Plain-text tables of a report.
pub fn render_text(rep: &ScanReport) -> String {
    let mut s = String::new();
    let h = &rep.histograms;
    let _ = writeln!(
        s,
        "Lines: {} (schema errors: {})",
        rep.lines, rep.schema_errors
    );
    let _ = writeln!(s);

    let _ = writeln!(s, "Status (all lines)");
    for st in ScanStatus::ALL {
        let n = rep.status_counts.get(&st).copied().unwrap_or(0);
        let _ = writeln!(s, "  {:<22}{:>8}", st.as_str(), n);
    }
    let _ = writeln!(s);

    let p = &rep.population;
    let _ = writeln!(s, "Population (first observation per domain)");
    for (label, n) in [
        ("domains", p.domains),
        ("domains with records", p.domains_with_records),
        ("records", p.records),
        ("valid records", p.valid_records),
        ("invalid records", p.invalid_records),
        ("undecodable records", p.undecodable_records),
        ("keyscanned domains", p.keyscanned_domains),
        ("domains with keys", p.domains_with_keys),
        ("hosts", p.hosts),
        ("hosts with keys", p.hosts_with_keys),
        ("host keys", p.host_keys),
    ] {
        let _ = writeln!(s, "  {label:<22}{n:>8}");
    }
    let _ = writeln!(s);

    let header = format!(
        "  {:<16}{:>8}{:>8}{:>10}{:>13}",
        "", "DNS", "SSH", "matching", "mismatching"
    );
    let _ = writeln!(s, "KEY-ALGO");
    let _ = writeln!(s, "{header}");
    let cols = [&h.dns, &h.ssh, &h.matching, &h.mismatching].map(|x| x.key_algo.rows());
    for (i, (label, dns)) in cols[0].iter().enumerate() {
        let _ = writeln!(
            s,
            "  {:<16}{:>8}{:>8}{:>10}{:>13}",
            label, dns, cols[1][i].1, cols[2][i].1, cols[3][i].1
        );
    }
    let _ = writeln!(
        s,
        "  {:<16}{:>8}{:>8}{:>10}{:>13}",
        "total",
        h.dns.key_algo.total(),
        h.ssh.key_algo.total(),
        h.matching.key_algo.total(),
        h.mismatching.key_algo.total()
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "HASH-TYPE");
    let _ = writeln!(s, "{header}");
    let cols = [&h.dns, &h.ssh, &h.matching, &h.mismatching].map(|x| x.hash_type.rows());
    for (i, (label, dns)) in cols[0].iter().enumerate() {
        let _ = writeln!(
            s,
            "  {:<16}{:>8}{:>8}{:>10}{:>13}",
            label, dns, cols[1][i].1, cols[2][i].1, cols[3][i].1
        );
    }
    let _ = writeln!(
        s,
        "  {:<16}{:>8}{:>8}{:>10}{:>13}",
        "total",
        h.dns.hash_type.total(),
        h.ssh.hash_type.total(),
        h.matching.hash_type.total(),
        h.mismatching.hash_type.total()
    );
    let _ = writeln!(
        s,
        "  reconciles: {}",
        if h.reconciles() { "yes" } else { "NO" }
    );
    let _ = writeln!(s);

    let m = &rep.match_classes;
    let _ = writeln!(s, "Match classes (keyscanned domains)");
    for (label, n) in [
        ("full", m.full),
        ("partial", m.partial),
        ("none", m.none),
        ("no SSH", m.no_ssh),
    ] {
        let _ = writeln!(s, "  {label:<22}{n:>8}");
    }
    for (ratio, n) in &m.ratios {
        let _ = writeln!(s, "  ratio {ratio:<16}{n:>8}");
    }
    let deciles: Vec<String> = m.deciles.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "  deciles {}", deciles.join(" "));
    let _ = writeln!(s);

    let d = &rep.dnssec;
    let _ = writeln!(s, "DNSSEC");
    let _ = writeln!(
        s,
        "  {:<18}{:>8}{:>10}{:>7}{:>9}",
        "", "SECURE", "INSECURE", "BOGUS", "UNKNOWN"
    );
    for (label, split) in [
        ("records", &d.records),
        ("record sets", &d.record_sets),
        ("matching domains", &d.matching_domains),
        ("hosts", &d.hosts),
    ] {
        let _ = writeln!(
            s,
            "  {:<18}{:>8}{:>10}{:>7}{:>9}",
            label, split.secure, split.insecure, split.bogus, split.unknown
        );
    }
    let _ = writeln!(
        s,
        "  secure matching domains: {}",
        rep.secure_matching_domains
    );
    let _ = writeln!(s);

    let _ = writeln!(
        s,
        "Shared record sets: {} sets over {} domains",
        rep.shared_record_sets.sets, rep.shared_record_sets.domains
    );
    let _ = writeln!(
        s,
        "Duplicate fingerprint clusters: {}",
        rep.duplicate_clusters.len()
    );
    for c in rep.duplicate_clusters.iter().take(20) {
        let _ = writeln!(
            s,
            "  {:>4}  {} {}…  {}",
            c.domains.len(),
            c.hash_type.code(),
            &c.fingerprint[..c.fingerprint.len().min(16)],
            c.domains.join(", ")
        );
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "Record set changes");
    for ev in [
        ChangeEvent::Unchanged,
        ChangeEvent::FullReplacement,
        ChangeEvent::PartialRemoval,
        ChangeEvent::PartialReplacement,
        ChangeEvent::Addition,
    ] {
        let n = rep.changes.counts.get(&ev).copied().unwrap_or(0);
        let label = serde_json::to_value(ev).ok();
        let label = label.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        let _ = writeln!(s, "  {label:<22}{n:>8}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dns::Qtype;
    use crate::keyscan::wire::Writer;

    fn rec(n: u8) -> SshfpRecord {
        SshfpRecord::new(KeyAlgo::ED25519, HashType::SHA256, vec![n; 32])
    }

    fn set(ns: &[u8]) -> BTreeSet<SshfpRecord> {
        ns.iter().map(|n| rec(*n)).collect()
    }

    fn lookup(outcome: Outcome, ad: bool) -> DnsLookupResult {
        DnsLookupResult {
            domain: "example.com".into(),
            qtype: Qtype::Sshfp,
            outcome,
            records: vec![],
            ad_flag: ad,
            validating: true,
            resolver: "127.0.0.1:53".parse().unwrap(),
            canonical_name: None,
            elapsed_ms: 0,
        }
    }

    fn key(n: u8) -> HostKey {
        HostKey::from_blob(
            Writer::new()
                .string(b"ssh-ed25519")
                .string(&[n; 32])
                .finish(),
        )
        .unwrap()
    }

    #[test]
    fn four_change_classes() {
        let old = set(&[1, 2]);
        assert_eq!(
            diff_record_sets(&old, &set(&[3, 4])),
            ChangeEvent::FullReplacement
        );
        assert_eq!(
            diff_record_sets(&old, &set(&[1])),
            ChangeEvent::PartialRemoval
        );
        assert_eq!(
            diff_record_sets(&old, &set(&[1, 3])),
            ChangeEvent::PartialReplacement
        );
        assert_eq!(
            diff_record_sets(&old, &set(&[1, 2])),
            ChangeEvent::Unchanged
        );
        assert_eq!(
            diff_record_sets(&old, &set(&[1, 2, 3])),
            ChangeEvent::Addition
        );
        assert_eq!(
            diff_record_sets(&set(&[]), &set(&[])),
            ChangeEvent::Unchanged
        );
    }

    #[test]
    fn dnssec_classes() {
        let plain = lookup(Outcome::NoError, false);
        assert_eq!(
            dnssec_status(&plain, &lookup(Outcome::NoError, true)),
            DnssecStatus::Secure
        );
        assert_eq!(
            dnssec_status(&plain, &lookup(Outcome::NoError, false)),
            DnssecStatus::Insecure
        );
        assert_eq!(
            dnssec_status(&plain, &lookup(Outcome::ServFail, false)),
            DnssecStatus::Bogus
        );
        assert_eq!(
            dnssec_status(&plain, &lookup(Outcome::Timeout, false)),
            DnssecStatus::Unknown
        );
        let nx = lookup(Outcome::NxDomain, false);
        assert_eq!(
            dnssec_status(&nx, &lookup(Outcome::ServFail, false)),
            DnssecStatus::Unknown
        );
    }

    #[test]
    fn match_classes() {
        let keys: Vec<HostKey> = (0..4).map(key).collect();
        let records: Vec<SshfpRecord> = keys
            .iter()
            .map(|k| {
                SshfpRecord::new(
                    KeyAlgo::ED25519,
                    HashType::SHA256,
                    k.fingerprint(HashType::SHA256).unwrap(),
                )
            })
            .collect();
        let full = classify_domain_match(&records, &keys);
        assert_eq!(
            (full.matched, full.total, full.class),
            (4, 4, MatchCategory::Full)
        );
        assert_eq!(full.reduced(), "1/1");
        assert_eq!(full.bin(), 9);
        let none = classify_domain_match(&records, &[key(9)]);
        assert_eq!(none.class, MatchCategory::None);
        let half = classify_domain_match(&records, &keys[..2]);
        assert_eq!(
            (half.class, half.reduced(), half.bin()),
            (MatchCategory::Partial, "1/2".into(), 5)
        );
    }

    #[test]
    fn clusters_sorted_by_size() {
        use crate::pipeline::{ParsedRecord, SCHEMA_VERSION};
        use crate::sshfp::Validity;
        let mk = |domain: &str, recs: &[u8]| {
            let mut r: DomainScanResult = serde_json::from_value(serde_json::json!({
                "schema_version": SCHEMA_VERSION, "input": domain, "domain": domain,
                "status": "no_ipv4_address", "started_at_ms": 0, "finished_at_ms": 0
            }))
            .unwrap();
            r.records = recs
                .iter()
                .map(|n| ParsedRecord {
                    record: rec(*n),
                    validity: Validity::Valid,
                })
                .collect();
            r
        };
        let log = vec![
            mk("a", &[1]),
            mk("b", &[1, 2]),
            mk("c", &[2]),
            mk("d", &[2]),
            mk("e", &[3]),
        ];
        let cl = duplicate_fingerprint_clusters(&log);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].domains, ["b", "c", "d"]);
        assert_eq!(cl[1].domains, ["a", "b"]);
        assert!(duplicate_fingerprint_clusters(&log[4..]).is_empty());
    }

    #[test]
    fn empty_report_is_zero() {
        let rep = aggregate_stats(std::iter::empty::<Result<DomainScanResult, ()>>());
        assert_eq!(rep, ScanReport::default());
        assert!(rep.histograms.reconciles());
        assert_eq!(
            rep.to_json(),
            aggregate_stats(std::iter::empty::<Result<DomainScanResult, ()>>()).to_json()
        );
        assert!(render_text(&rep).contains("reconciles: yes"));
    }
}
