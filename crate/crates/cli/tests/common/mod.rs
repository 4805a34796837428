//! Shared support for the acceptance suite: a deterministic PRNG, the
//! bundled synthetic corpus generator, and an independent oracle pipeline
//! (naive parsing, all-pairs clustering with a full-matrix edit distance,
//! full-sort percentile thresholds, naive sliding medians). The oracle
//! shares no code with the implementation it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn letters(&mut self, len: u64) -> String {
        (0..len)
            .map(|_| (b'A' + self.below(26) as u8) as char)
            .collect()
    }

    pub fn letters_between(&mut self, lo: u64, hi: u64) -> String {
        let len = lo + self.below(hi - lo + 1);
        self.letters(len)
    }
}

// ---------------------------------------------------------------------------
// Bundled synthetic corpus
// ---------------------------------------------------------------------------

/// Eight landmark references, each dominating a five-year era of the
/// 1980-2017 citing span, three mergeable spelling variants apiece plus a
/// same-key twin with a conflicting volume, forty mid-frequency journal
/// references, and enough unique tail references per year that every
/// five-year window holds more than 1,000 distinct cited references (so the
/// 0.1% rank is at least 2 and top membership is non-trivial).
pub fn golden_fixture() -> String {
    let mut rng = SplitMix64(0x00D1_CE5E_ED00_0001);
    let mut uid: u64 = 0;

    struct Landmark {
        base: String,
        typo: String,
        short: String,
        twin: String,
    }

    let mut landmarks = Vec::new();
    for k in 0..8u64 {
        let author = format!("{} {}", rng.letters_between(5, 8), rng.letters(2));
        let source = format!(
            "{} {} {}",
            rng.letters_between(4, 7),
            rng.letters_between(3, 6),
            rng.letters(3)
        );
        let rpy = 1946 + k as i32 * 7 + rng.below(4) as i32;
        let volume = 1 + rng.below(60);
        let page = 1 + rng.below(900);
        let mut typo_source = source.clone().into_bytes();
        typo_source[1] = b'X';
        let typo_source = String::from_utf8(typo_source).unwrap();
        landmarks.push(Landmark {
            base: format!("{author}, {rpy}, {source}, V{volume}, P{page}"),
            typo: format!("{author}, {rpy}, {typo_source}, V{volume}, P{page}"),
            short: format!("{author}, {rpy}, {source}"),
            twin: format!("{author}, {rpy}, {source}, V{}, P{page}", volume + 1),
        });
    }

    let mids: Vec<String> = (0..40u64)
        .map(|_| {
            let author = format!("{} {}", rng.letters_between(5, 8), rng.letters(2));
            let source = format!("{} {}", rng.letters_between(5, 7), rng.letters(4));
            let rpy = 1950 + rng.below(60);
            format!(
                "{author}, {rpy}, {source}, V{}, P{}",
                1 + rng.below(40),
                1 + rng.below(800)
            )
        })
        .collect();

    let tail_ref = |rng: &mut SplitMix64, uid: &mut u64| -> String {
        *uid += 1;
        let author = format!("{} {}", rng.letters_between(6, 10), rng.letters(1));
        let source = format!("J {} {}{}", rng.letters_between(4, 7), rng.letters(3), uid);
        let rpy = 1900 + rng.below(116);
        if rng.chance(1, 4) {
            format!(
                "{author}, {rpy}, {source}, V{}, P{}",
                1 + rng.below(30),
                1 + rng.below(999)
            )
        } else {
            format!("{author}, {rpy}, {source}")
        }
    };

    let mut out = String::from("FN Synthetic Web of Science Export\nVR 1.0\n");
    let mut record_no = 0u64;

    let push_record = |out: &mut String, py: i32, doc_type: &str, refs: &[String], record_no: &mut u64| {
        *record_no += 1;
        out.push_str("PT J\n");
        out.push_str(&format!("PY {py}\n"));
        out.push_str(&format!("DT {doc_type}\n"));
        out.push_str(&format!("UT SYN:{py}:{record_no}\n"));
        for (i, r) in refs.iter().enumerate() {
            if i == 0 {
                out.push_str(&format!("CR {r}\n"));
            } else {
                out.push_str(&format!("   {r}\n"));
            }
        }
        out.push_str("ER\n\n");
    };

    for year in 1980..=2017i32 {
        let era = (((year - 1980) / 5) as usize).min(7);
        let mut occurrences: Vec<String> = Vec::with_capacity(416);

        // dominant landmark: 8 occurrences split over its variants
        let lm = &landmarks[era];
        for _ in 0..4 {
            occurrences.push(lm.base.clone());
        }
        for _ in 0..2 {
            occurrences.push(lm.typo.clone());
        }
        for _ in 0..2 {
            occurrences.push(lm.short.clone());
        }
        // two supporting landmarks at low intensity
        for offset in [2usize, 5] {
            let support = &landmarks[(era + offset) % 8];
            occurrences.push(support.base.clone());
            occurrences.push(support.base.clone());
        }
        // the non-mergeable twin of the dominant landmark
        occurrences.push(lm.twin.clone());

        // mid references: 32 of 40 active per year, two occurrences each
        for (i, mid) in mids.iter().enumerate() {
            if (i as i32 + year) % 5 != 0 {
                occurrences.push(mid.clone());
                occurrences.push(mid.clone());
            }
        }

        // six junk references per year that the RPY window must reject
        for junk in 0..6u64 {
            uid += 1;
            occurrences.push(match junk {
                0 | 1 => format!("FUTURE Q, 2016, TOO RECENT J {uid}"),
                2 | 3 => format!("ANCIENT R, 1899, TOO OLD J {uid}"),
                4 => format!("ANON, UNDATED MANUSCRIPT {uid}"),
                _ => ",,,,".to_string(),
            });
        }

        // unique tail references fill each year up to 416 occurrences
        while occurrences.len() < 416 {
            occurrences.push(tail_ref(&mut rng, &mut uid));
        }

        rng.shuffle(&mut occurrences);
        for (i, chunk) in occurrences.chunks(32).enumerate() {
            let doc_type = if (year == 1990 && i == 3) || (year == 2005 && i == 7) {
                "Review"
            } else {
                "Article"
            };
            push_record(&mut out, year, doc_type, chunk, &mut record_no);
        }
    }

    // records outside the citing-year window: skipped on import
    for py in [1979, 1979, 2018, 2018] {
        let refs: Vec<String> = (0..10).map(|_| tail_ref(&mut rng, &mut uid)).collect();
        push_record(&mut out, py, "Article", &refs, &mut record_no);
    }

    // one structurally broken record (no ER); the next PT recovers
    out.push_str("PT J\nPY 1999\nDT Article\nUT SYN:BROKEN\nCR LOST X, 1950, NEVER COUNTED J\n");
    let refs: Vec<String> = (0..8).map(|_| tail_ref(&mut rng, &mut uid)).collect();
    push_record(&mut out, 1999, "Article", &refs, &mut record_no);

    out.push_str("EF\n");
    out
}

// ---------------------------------------------------------------------------
// Oracle pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OracleVariant {
    pub raw: String,
    pub author: String,
    pub rpy: Option<i32>,
    pub source: String,
    pub volume: Option<String>,
    pub page: Option<String>,
    pub doi: Option<String>,
    pub counts: BTreeMap<i32, u64>,
    pub total: u64,
}

#[derive(Debug, Clone)]
pub struct OracleMerged {
    pub raw: String,
    pub rpy: Option<i32>,
    pub n_cr: u64,
    pub counts: BTreeMap<i32, u64>,
}

/// Line-by-line record scan, written independently of the streaming reader.
pub fn oracle_parse_records(text: &str) -> Vec<(Option<i32>, Vec<String>)> {
    let mut records = Vec::new();
    let mut current: Option<(Option<i32>, Vec<String>, bool)> = None;
    for line in text.lines() {
        if line.starts_with("PT ") || line == "PT" {
            current = Some((None, Vec::new(), false));
        } else if line == "ER" || line.starts_with("ER ") {
            if let Some((py, refs, _)) = current.take() {
                records.push((py, refs));
            }
        } else if line == "EF" || line.starts_with("EF ") {
            break;
        } else if let Some((py, refs, in_cr)) = current.as_mut() {
            if let Some(rest) = line.strip_prefix("   ") {
                if *in_cr && !rest.trim().is_empty() {
                    refs.push(rest.trim().to_string());
                }
            } else if let Some(rest) = line.strip_prefix("PY ") {
                let t = rest.trim();
                *py = if t.len() == 4 && t.chars().all(|c| c.is_ascii_digit()) {
                    t.parse().ok()
                } else {
                    None
                };
                *in_cr = false;
            } else if let Some(rest) = line.strip_prefix("CR ") {
                if !rest.trim().is_empty() {
                    refs.push(rest.trim().to_string());
                }
                *in_cr = true;
            } else if line.len() == 2 || line.as_bytes().get(2) == Some(&b' ') {
                // some other two-character tag ends a CR block
                *in_cr = false;
            }
        }
    }
    records
}

pub fn oracle_parse_cr(raw: &str) -> OracleVariant {
    let segments: Vec<String> = raw.split(',').map(|s| s.trim().to_string()).collect();
    let is_year = |s: &str| s.len() == 4 && s.chars().all(|c| c.is_ascii_digit());
    let author = segments.first().cloned().unwrap_or_default();
    let rpy = segments
        .iter()
        .find(|s| is_year(s))
        .and_then(|s| s.parse().ok());
    let mut source = String::new();
    let mut volume = None;
    let mut page = None;
    let mut doi = None;
    for s in segments.iter().skip(1) {
        if let Some(rest) = s.strip_prefix("DOI ") {
            if doi.is_none() && !rest.trim().is_empty() {
                doi = Some(rest.trim().to_string());
            }
        } else if s.len() >= 2
            && s.starts_with('V')
            && s.as_bytes()[1].is_ascii_digit()
        {
            if volume.is_none() {
                volume = Some(s[1..].to_string());
            }
        } else if s.len() >= 2
            && s.starts_with('P')
            && s.as_bytes()[1].is_ascii_digit()
        {
            if page.is_none() {
                page = Some(s[1..].to_string());
            }
        } else if source.is_empty() && !is_year(s) && !s.is_empty() {
            source = s.clone();
        }
    }
    OracleVariant {
        raw: raw.to_string(),
        author,
        rpy,
        source,
        volume,
        page,
        doi,
        counts: BTreeMap::new(),
        total: 0,
    }
}

/// Aggregate admitted occurrences: citing years in `py`, reference years in
/// `rpy` (missing years dropped, matching the pipeline defaults).
pub fn oracle_variant_table(
    records: &[(Option<i32>, Vec<String>)],
    py: (i32, i32),
    rpy: (i32, i32),
) -> Vec<OracleVariant> {
    let mut table: BTreeMap<String, OracleVariant> = BTreeMap::new();
    for (year, refs) in records {
        let Some(year) = *year else { continue };
        if year < py.0 || year > py.1 {
            continue;
        }
        for raw in refs {
            let parsed = oracle_parse_cr(raw);
            match parsed.rpy {
                Some(y) if y >= rpy.0 && y <= rpy.1 => {}
                _ => continue,
            }
            let entry = table.entry(raw.clone()).or_insert(parsed);
            *entry.counts.entry(year).or_insert(0) += 1;
            entry.total += 1;
        }
    }
    table.into_values().collect()
}

/// Textbook full-matrix edit distance.
#[allow(clippy::needless_range_loop)] // textbook form, on purpose
pub fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1)
                .min(d[i][j - 1] + 1)
                .min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

pub fn oracle_key(author: &str, source: &str) -> String {
    author
        .chars()
        .chain(source.chars())
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

/// What the clustering oracle needs to know about one variant.
#[derive(Debug, Clone)]
pub struct OracleItem {
    pub key: String,
    pub rpy: Option<i32>,
    pub volume: Option<String>,
    pub page: Option<String>,
    pub doi: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleClusterConfig {
    pub threshold: f64,
    pub volume: bool,
    pub page: bool,
    pub doi: bool,
}

impl Default for OracleClusterConfig {
    fn default() -> Self {
        OracleClusterConfig {
            threshold: 0.75,
            volume: true,
            page: true,
            doi: false,
        }
    }
}

/// All-pairs match test plus depth-first transitive closure; no blocking,
/// no union-find, no shared code with the implementation.
pub fn oracle_cluster(items: &[OracleItem], cfg: OracleClusterConfig) -> Vec<Vec<usize>> {
    let n = items.len();
    let gate = |on: bool, x: &Option<String>, y: &Option<String>| {
        !on || match (x.as_ref(), y.as_ref()) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        }
    };
    let matches = |a: &OracleItem, b: &OracleItem| {
        if a.rpy != b.rpy {
            return false;
        }
        let max_len = a.key.chars().count().max(b.key.chars().count());
        let sim = if max_len == 0 {
            1.0
        } else {
            1.0 - oracle_levenshtein(&a.key, &b.key) as f64 / max_len as f64
        };
        sim >= cfg.threshold
            && gate(cfg.volume, &a.volume, &b.volume)
            && gate(cfg.page, &a.page, &b.page)
            && gate(cfg.doi, &a.doi, &b.doi)
    };
    let mut component = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            if component[i] != usize::MAX {
                continue;
            }
            component[i] = next;
            for j in 0..n {
                if component[j] == usize::MAX && matches(&items[i], &items[j]) {
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in component.iter().enumerate() {
        clusters.entry(c).or_default().push(i);
    }
    clusters.into_values().collect()
}

pub fn oracle_merge(variants: &[OracleVariant], clusters: &[Vec<usize>]) -> Vec<OracleMerged> {
    clusters
        .iter()
        .map(|members| {
            let mut best = &variants[members[0]];
            for &i in members {
                let v = &variants[i];
                if v.total > best.total || (v.total == best.total && v.raw < best.raw) {
                    best = v;
                }
            }
            let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
            let mut n_cr = 0;
            for &i in members {
                for (&y, &c) in &variants[i].counts {
                    *counts.entry(y).or_insert(0) += c;
                }
                n_cr += variants[i].total;
            }
            OracleMerged {
                raw: best.raw.clone(),
                rpy: best.rpy,
                n_cr,
                counts,
            }
        })
        .collect()
}

fn oracle_windowed(counts: &BTreeMap<i32, u64>, year: i32, r: u32) -> u64 {
    (year - r as i32..=year + r as i32)
        .map(|y| counts.get(&y).copied().unwrap_or(0))
        .sum()
}

/// Literal per-year rule: sort all positive windowed counts descending,
/// read the count at rank `1 + floor(n*p)`, keep references strictly above
/// it and strictly above the mean.
pub fn oracle_top_rows_per_year(
    counts: &[&BTreeMap<i32, u64>],
    year: i32,
    r: u32,
    p_num: u64,
    p_den: u64,
) -> Vec<bool> {
    let windowed: Vec<u64> = counts.iter().map(|c| oracle_windowed(c, year, r)).collect();
    let mut positive: Vec<u64> = windowed.iter().copied().filter(|&c| c > 0).collect();
    if positive.is_empty() {
        return vec![false; counts.len()];
    }
    positive.sort_unstable_by(|a, b| b.cmp(a));
    let n = positive.len() as u64;
    let rank = 1 + ((n as u128 * p_num as u128) / p_den as u128) as u64;
    let c = positive[(rank - 1) as usize];
    let total: u64 = positive.iter().sum();
    windowed
        .iter()
        .map(|&w| w > c && (w as u128) * (n as u128) > total as u128)
        .collect()
}

pub fn oracle_n_top(
    merged: &[OracleMerged],
    py: (i32, i32),
    r: u32,
    p_num: u64,
    p_den: u64,
) -> Vec<u64> {
    let counts: Vec<&BTreeMap<i32, u64>> = merged.iter().map(|m| &m.counts).collect();
    let mut n_top = vec![0u64; merged.len()];
    for year in py.0..=py.1 {
        for (i, is_top) in oracle_top_rows_per_year(&counts, year, r, p_num, p_den)
            .into_iter()
            .enumerate()
        {
            if is_top {
                n_top[i] += 1;
            }
        }
    }
    n_top
}

pub fn oracle_spectrum(merged: &[OracleMerged], m: u32) -> Vec<(i32, u64, f64)> {
    let mut by_rpy: BTreeMap<i32, u64> = BTreeMap::new();
    for row in merged {
        if let Some(rpy) = row.rpy {
            *by_rpy.entry(rpy).or_insert(0) += row.n_cr;
        }
    }
    let (Some(&lo), Some(&hi)) = (by_rpy.keys().next(), by_rpy.keys().next_back()) else {
        return Vec::new();
    };
    (lo..=hi)
        .map(|rpy| {
            let mut window: Vec<u64> = (rpy - m as i32..=rpy + m as i32)
                .filter(|y| *y >= lo && *y <= hi)
                .map(|y| by_rpy.get(&y).copied().unwrap_or(0))
                .collect();
            window.sort_unstable();
            let median = if window.len() % 2 == 1 {
                window[window.len() / 2] as f64
            } else {
                (window[window.len() / 2 - 1] + window[window.len() / 2]) as f64 / 2.0
            };
            let n_cr = by_rpy.get(&rpy).copied().unwrap_or(0);
            (rpy, n_cr, n_cr as f64 - median)
        })
        .collect()
}

fn oracle_csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Sorted, filtered indicator CSV exactly as the export contract states:
/// `N_TOP` descending, `N_CR` descending, `RPY` ascending (absent years
/// last), `CR` ascending; RFC 4180 quoting; one LF per line.
pub fn oracle_indicator_csv(rows: &[(String, Option<i32>, u64, u64)]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        b.3.cmp(&a.3)
            .then(b.2.cmp(&a.2))
            .then(match (a.1, b.1) {
                (Some(x), Some(y)) => x.cmp(&y),
                (None, None) => std::cmp::Ordering::Equal,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (Some(_), None) => std::cmp::Ordering::Less,
            })
            .then(a.0.cmp(&b.0))
    });
    let mut out = String::from("CR,RPY,N_CR,N_TOP0_1+\n");
    for (cr, rpy, n_cr, n_top) in &sorted {
        let rpy = rpy.map(|y| y.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{rpy},{n_cr},{n_top}\n",
            oracle_csv_field(cr)
        ));
    }
    out
}

pub fn oracle_spectrum_csv(rows: &[(i32, u64, f64)]) -> String {
    let mut out = String::from("RPY,N_CR,MEDIAN_DEV\n");
    for &(rpy, n_cr, dev) in rows {
        let dev = if dev.fract() == 0.0 {
            format!("{}", dev as i64)
        } else {
            format!("{dev:.1}")
        };
        out.push_str(&format!("{rpy},{n_cr},{dev}\n"));
    }
    out
}

/// The whole oracle pipeline under the bundled-run parameters: windows
/// 1980-2017 / 1900-2015, threshold 0.75 with volume+page gates, smoothing
/// ranges 2/2, p = 0.001, filter `n_top >= min_n_top`.
pub fn oracle_golden_pipeline(text: &str, min_n_top: u64) -> (String, String) {
    let records = oracle_parse_records(text);
    let variants = oracle_variant_table(&records, (1980, 2017), (1900, 2015));
    let items: Vec<OracleItem> = variants
        .iter()
        .map(|v| OracleItem {
            key: oracle_key(&v.author, &v.source),
            rpy: v.rpy,
            volume: v.volume.clone(),
            page: v.page.clone(),
            doi: v.doi.clone(),
        })
        .collect();
    let clusters = oracle_cluster(&items, OracleClusterConfig::default());
    let merged = oracle_merge(&variants, &clusters);
    let n_top = oracle_n_top(&merged, (1980, 2017), 2, 1, 1000);
    let rows: Vec<(String, Option<i32>, u64, u64)> = merged
        .iter()
        .zip(&n_top)
        .filter(|(_, &n)| n >= min_n_top)
        .map(|(m, &n)| (m.raw.clone(), m.rpy, m.n_cr, n))
        .collect();
    let spectrum = oracle_spectrum(&merged, 2);
    (oracle_indicator_csv(&rows), oracle_spectrum_csv(&spectrum))
}

/// Total occurrences the oracle admits for the bundled corpus; used by the
/// conservation criterion.
pub fn oracle_admitted_occurrences(text: &str) -> u64 {
    let records = oracle_parse_records(text);
    oracle_variant_table(&records, (1980, 2017), (1900, 2015))
        .iter()
        .map(|v| v.total)
        .sum()
}

// ---------------------------------------------------------------------------
// Large streaming fixture
// ---------------------------------------------------------------------------

/// Writes a ~1 GB export of `records` records (20 references each) drawn
/// from a pool of about 400,000 distinct references.
pub fn write_big_export(w: &mut impl std::io::Write, records: u64) -> std::io::Result<()> {
    w.write_all(b"FN Synthetic Web of Science Export\nVR 1.0\n")?;
    let mut rng = SplitMix64(0xB16_DA7A);
    const POOL: u64 = 400_000;
    for i in 0..records {
        let year = 1980 + (i % 38);
        writeln!(w, "PT J\nPY {year}\nDT Article\nUT BIG:{i}")?;
        for r in 0..20u64 {
            let tag = if r == 0 { "CR " } else { "   " };
            let id = rng.below(POOL);
            let a = (b'A' + (id % 26) as u8) as char;
            let b = (b'A' + (id / 26 % 26) as u8) as char;
            let c = (b'A' + (id / 676 % 26) as u8) as char;
            // the id inside the source keeps pool entries distinct
            writeln!(
                w,
                "{tag}{c}{b}{a}SON {a}{b}, {}, J LARGE CORPUS STUDIES {id}, V{}, P{}",
                1900 + id % 116,
                1 + id % 70,
                1 + id % 995,
            )?;
        }
        writeln!(w, "ER\n")?;
    }
    w.write_all(b"EF\n")
}
