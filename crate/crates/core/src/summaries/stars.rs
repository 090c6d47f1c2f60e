use serde::{Deserialize, Serialize};

/// Ordered p-value thresholds with their labels. A p-value gets the label
/// of the first threshold it is strictly below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarScheme {
    thresholds: Vec<(f64, String)>,
}

impl Default for StarScheme {
    /// `***` p<.01, `**` p<.05, `*` p<.10, `.` p<.15.
    fn default() -> Self {
        StarScheme {
            thresholds: vec![
                (0.01, "***".into()),
                (0.05, "**".into()),
                (0.10, "*".into()),
                (0.15, ".".into()),
            ],
        }
    }
}

impl StarScheme {
    /// `None` unless thresholds are strictly increasing.
    pub fn new(thresholds: Vec<(f64, String)>) -> Option<Self> {
        thresholds
            .windows(2)
            .all(|w| w[0].0 < w[1].0)
            .then_some(StarScheme { thresholds })
    }

    pub fn thresholds(&self) -> &[(f64, String)] {
        &self.thresholds
    }

    pub fn label(&self, p: f64) -> &str {
        self.thresholds
            .iter()
            .find(|(t, _)| p < *t)
            .map_or("", |(_, l)| l.as_str())
    }
}

pub fn stars(p: f64, scheme: &StarScheme) -> &str {
    scheme.label(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_note_thresholds() {
        let s = StarScheme::default();
        assert_eq!(stars(0.007, &s), "***");
        assert_eq!(stars(0.03, &s), "**");
        assert_eq!(stars(0.096, &s), "*");
        assert_eq!(stars(0.12, &s), ".");
        assert_eq!(stars(0.15, &s), "");
        assert_eq!(stars(0.01, &s), "**");
        assert_eq!(stars(0.0, &s), "***");
        assert_eq!(stars(1.0, &s), "");
    }

    #[test]
    fn rejects_unordered() {
        assert!(StarScheme::new(vec![(0.05, "a".into()), (0.01, "b".into())]).is_none());
        assert!(StarScheme::new(vec![(0.05, "a".into()), (0.05, "b".into())]).is_none());
    }
}
