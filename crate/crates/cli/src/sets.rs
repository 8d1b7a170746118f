use arclab_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated subset of `[1, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSet {
    pub n: u64,
    pub elements: Vec<u64>,
}

/// Parses a set generator.
///
/// - `uniform:n=1000,delta=0.5,seed=7` keeps each `x ≤ n` with probability
///   `delta` (ChaCha8 stream; `seed` falls back to `default_seed`).
/// - `range:lo..hi` is the inclusive interval, with `n = hi`.
/// - `multiples:d=25,count=40,n=1000` is `{d, 2d, …, count·d}`.
/// - `list:1,5,9` gives those elements, with `n` their maximum.
/// - `file:PATH`, or a bare existing path, reads one integer per line
///   (blank lines and `#` comments skipped), with `n` their maximum.
///
/// An explicit `n_override` replaces the implied `n`.
pub fn generate(spec: &str, default_seed: u64, n_override: Option<u64>) -> Result<GeneratedSet> {
    let (kind, body) = match spec.split_once(':') {
        Some(kb) => kb,
        None if std::path::Path::new(spec).is_file() => ("file", spec),
        None => return Err(Error::Parse(format!("set spec '{spec}' needs a 'kind:' prefix or a file path"))),
    };
    let mut set = match kind.trim() {
        "uniform" => {
            let kv = pairs(body)?;
            let n = get_u64(&kv, "n")?.ok_or_else(|| Error::Parse("uniform needs n=".into()))?;
            let delta = get_f64(&kv, "delta")?.ok_or_else(|| Error::Parse("uniform needs delta=".into()))?;
            if !(0.0..=1.0).contains(&delta) {
                return Err(Error::Domain(format!("delta = {delta} must lie in [0, 1]")));
            }
            let seed = get_u64(&kv, "seed")?.unwrap_or(default_seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            GeneratedSet { n, elements: (1..=n).filter(|_| rng.gen_bool(delta)).collect() }
        }
        "range" => {
            let (lo, hi) = body
                .split_once("..")
                .ok_or_else(|| Error::Parse(format!("range '{body}' should look like lo..hi")))?;
            let lo = num(lo)?;
            let hi = num(hi)?;
            if lo == 0 || lo > hi {
                return Err(Error::Domain(format!("range {lo}..{hi} must satisfy 1 ≤ lo ≤ hi")));
            }
            GeneratedSet { n: hi, elements: (lo..=hi).collect() }
        }
        "multiples" => {
            let kv = pairs(body)?;
            let d = get_u64(&kv, "d")?.ok_or_else(|| Error::Parse("multiples needs d=".into()))?;
            let count = get_u64(&kv, "count")?.ok_or_else(|| Error::Parse("multiples needs count=".into()))?;
            if d == 0 {
                return Err(Error::Domain("multiples needs d ≥ 1".into()));
            }
            let n = get_u64(&kv, "n")?.unwrap_or(d * count);
            GeneratedSet { n, elements: (1..=count).map(|i| i * d).collect() }
        }
        "list" => {
            let mut elements = body
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            elements.sort_unstable();
            elements.dedup();
            GeneratedSet { n: elements.last().copied().unwrap_or(1), elements }
        }
        "file" => {
            let text = std::fs::read_to_string(body)?;
            let mut elements = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            elements.sort_unstable();
            elements.dedup();
            GeneratedSet { n: elements.last().copied().unwrap_or(1), elements }
        }
        other => return Err(Error::Parse(format!("unknown set kind '{other}'"))),
    };
    if let Some(n) = n_override {
        set.n = n;
    }
    if let Some(&x) = set.elements.iter().find(|&&x| x == 0 || x > set.n) {
        return Err(Error::Domain(format!("element {x} lies outside [1, {}]", set.n)));
    }
    Ok(set)
}

fn pairs(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn get_u64(kv: &[(String, String)], key: &str) -> Result<Option<u64>> {
    lookup(kv, key).map(num).transpose()
}

fn get_f64(kv: &[(String, String)], key: &str) -> Result<Option<f64>> {
    lookup(kv, key)
        .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{v}' for {key}"))))
        .transpose()
}

fn num(s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad integer '{}'", s.trim())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let u = generate("uniform:n=1000,delta=0.5,seed=7", 0, None).unwrap();
        assert_eq!(u.n, 1000);
        assert_eq!(u, generate("uniform:seed=7,delta=0.5,n=1000", 99, None).unwrap());
        assert!((400..600).contains(&u.elements.len()));
        assert_eq!(generate("range:1..10", 0, None).unwrap().elements, (1..=10).collect::<Vec<_>>());
        let m = generate("multiples:d=25,count=40", 0, None).unwrap();
        assert_eq!((m.n, m.elements.len(), m.elements[39]), (1000, 40, 1000));
        assert_eq!(generate("list:9,1,5,5", 0, Some(12)).unwrap(), GeneratedSet { n: 12, elements: vec![1, 5, 9] });
        assert!(generate("list:3", 0, Some(2)).is_err());
        assert!(generate("uniform:n=10", 0, None).is_err());
        assert!(generate("gaussian:n=10", 0, None).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        std::fs::write(&path, "# squares\n4\n1\n\n9\n").unwrap();
        let want = GeneratedSet { n: 9, elements: vec![1, 4, 9] };
        assert_eq!(generate(path.to_str().unwrap(), 0, None).unwrap(), want);
        assert_eq!(generate(&format!("file:{}", path.display()), 0, None).unwrap(), want);
    }
}
