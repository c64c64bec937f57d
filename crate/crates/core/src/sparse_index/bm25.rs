use crate::error::{Error, Result};

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; strictly positive for `1 <= df <= N`.
pub fn idf(df: u64, doc_count: u64) -> f64 {
    let (df, n) = (df as f64, doc_count as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[inline]
pub(crate) fn term_weight(tf: f64, idf: f64, doc_len: f64, avg_len: f64, k1: f64, b: f64) -> f64 {
    if tf == 0.0 {
        return 0.0;
    }
    idf * (tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avg_len)))
}

/// Okapi BM25 contribution of one term to one document.
pub fn bm25_score(
    tf: u64,
    df: u64,
    doc_len: u64,
    avg_len: f64,
    doc_count: u64,
    k1: f64,
    b: f64,
) -> Result<f64> {
    if doc_count == 0 {
        return Err(Error::InvalidArgument("bm25: collection size must be >= 1".into()));
    }
    if df == 0 || df > doc_count {
        return Err(Error::InvalidArgument(format!(
            "bm25: document frequency {df} outside 1..={doc_count}"
        )));
    }
    Ok(term_weight(
        tf as f64,
        idf(df, doc_count),
        doc_len as f64,
        avg_len,
        k1,
        b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_value() {
        // ln(2) * (2 * 1.9 / 2.9), evaluated by hand
        let expected = 2f64.ln() * (2.0 * 1.9 / 2.9);
        assert!((expected - 0.9083).abs() < 1e-4);
        let got = bm25_score(2, 2, 10, 10.0, 4, DEFAULT_K1, DEFAULT_B).unwrap();
        assert!((got - 0.9083).abs() < 1e-4, "{got}");
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_tf_scores_zero() {
        assert_eq!(bm25_score(0, 3, 7, 5.0, 10, 0.9, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn idf_positive_when_df_equals_n() {
        for n in [1u64, 2, 10, 1_000_000] {
            let got = bm25_score(1, n, 1, 1.0, n, 0.9, 0.4).unwrap();
            assert!(got > 0.0);
            let want = (1.0 + 0.5 / (n as f64 + 0.5)).ln();
            assert!((idf(n, n) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_degenerate_statistics() {
        assert!(bm25_score(1, 0, 1, 1.0, 4, 0.9, 0.4).is_err());
        assert!(bm25_score(1, 1, 1, 1.0, 0, 0.9, 0.4).is_err());
        assert!(bm25_score(1, 5, 1, 1.0, 4, 0.9, 0.4).is_err());
    }
}
