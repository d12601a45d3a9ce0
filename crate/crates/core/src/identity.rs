//! Mapping contributor emails to organizational stakeholders.
//!
//! Resolution order: a full-email override, then an exact (case-insensitive)
//! domain rule. There is no subdomain inference: `corp.example.com` and
//! `example.com` are unrelated unless both are configured.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IssueRecord;

/// Synthetic stakeholder collecting contributors the map cannot resolve.
pub const UNAFFILIATED: &str = "_unaffiliated";

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("invalid email address {0:?}")]
    InvalidEmail(String),
    #[error("invalid stakeholder id {0:?}")]
    InvalidStakeholderId(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

/// Lowercase organization slug.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StakeholderId(String);

impl StakeholderId {
    pub fn new(id: &str) -> Result<Self, IdentityError> {
        let id = id.trim().to_lowercase();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(IdentityError::InvalidStakeholderId(id));
        }
        Ok(StakeholderId(id))
    }

    pub fn unaffiliated() -> Self {
        StakeholderId(UNAFFILIATED.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StakeholderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for StakeholderId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserCategory {
    InfrastructureProvider,
    PlatformUser,
    ProductProvider,
    ProductSupporter,
    ServiceProvider,
    Unknown,
}

impl UserCategory {
    /// The five labeled categories, excluding `Unknown`.
    pub const LABELED: [UserCategory; 5] = [
        UserCategory::InfrastructureProvider,
        UserCategory::PlatformUser,
        UserCategory::ProductProvider,
        UserCategory::ProductSupporter,
        UserCategory::ServiceProvider,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UserCategory::InfrastructureProvider => "infrastructure_provider",
            UserCategory::PlatformUser => "platform_user",
            UserCategory::ProductProvider => "product_provider",
            UserCategory::ProductSupporter => "product_supporter",
            UserCategory::ServiceProvider => "service_provider",
            UserCategory::Unknown => "unknown",
        }
    }
}

impl fmt::Display for UserCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stakeholder {
    pub id: StakeholderId,
    pub display_name: String,
    pub user_category: UserCategory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Resolved(Stakeholder),
    Unresolved(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffiliationFile {
    #[serde(default)]
    domains: BTreeMap<String, String>,
    #[serde(default)]
    overrides: BTreeMap<String, String>,
    #[serde(default)]
    categories: BTreeMap<String, UserCategory>,
}

/// Email and domain rules plus optional category labels. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AffiliationMap {
    domain_rules: BTreeMap<String, StakeholderId>,
    email_overrides: BTreeMap<String, StakeholderId>,
    category_labels: BTreeMap<StakeholderId, UserCategory>,
}

impl AffiliationMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_domain(mut self, domain: &str, id: &str) -> Result<Self, IdentityError> {
        self.domain_rules
            .insert(domain.trim().to_lowercase(), StakeholderId::new(id)?);
        Ok(self)
    }

    pub fn with_override(mut self, email: &str, id: &str) -> Result<Self, IdentityError> {
        let (local, domain) = split_email(email)?;
        self.email_overrides
            .insert(format!("{local}@{domain}"), StakeholderId::new(id)?);
        Ok(self)
    }

    pub fn with_category(
        mut self,
        id: &str,
        category: UserCategory,
    ) -> Result<Self, IdentityError> {
        self.category_labels
            .insert(StakeholderId::new(id)?, category);
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self, IdentityError> {
        let file: AffiliationFile =
            serde_json::from_str(text).map_err(|e| IdentityError::Config {
                path: "<affiliation map>".into(),
                message: e.to_string(),
            })?;
        let mut map = AffiliationMap::new();
        for (domain, id) in &file.domains {
            map = map.with_domain(domain, id)?;
        }
        for (email, id) in &file.overrides {
            map = map.with_override(email, id)?;
        }
        for (id, cat) in file.categories {
            map = map.with_category(&id, cat)?;
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IdentityError> {
        let path = path.as_ref();
        let config_err = |message: String| IdentityError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
        Self::from_json(&text).map_err(|e| match e {
            IdentityError::Config { message, .. } => config_err(message),
            other => config_err(other.to_string()),
        })
    }

    pub fn category(&self, id: &StakeholderId) -> UserCategory {
        self.category_labels
            .get(id)
            .copied()
            .unwrap_or(UserCategory::Unknown)
    }

    pub fn stakeholder(&self, id: &StakeholderId) -> Stakeholder {
        Stakeholder {
            id: id.clone(),
            display_name: id.as_str().to_string(),
            user_category: self.category(id),
        }
    }

    /// Every stakeholder id any rule or label refers to.
    pub fn registry(&self) -> BTreeSet<StakeholderId> {
        self.domain_rules
            .values()
            .chain(self.email_overrides.values())
            .chain(self.category_labels.keys())
            .cloned()
            .collect()
    }

    /// Resolves `email`, collapsing anything unresolvable (including
    /// malformed addresses) into [`UNAFFILIATED`].
    pub fn stakeholder_id_for(&self, email: &str) -> StakeholderId {
        match resolve(email, self) {
            Ok(Resolution::Resolved(s)) => s.id,
            _ => StakeholderId::unaffiliated(),
        }
    }
}

fn split_email(email: &str) -> Result<(String, String), IdentityError> {
    let email = email.trim();
    let invalid = || IdentityError::InvalidEmail(email.to_string());
    let (local, domain) = email.split_once('@').ok_or_else(invalid)?;
    if local.is_empty()
        || domain.is_empty()
        || domain.contains('@')
        || email.chars().any(char::is_whitespace)
    {
        return Err(invalid());
    }
    Ok((local.to_lowercase(), domain.to_lowercase()))
}

pub fn resolve(email: &str, map: &AffiliationMap) -> Result<Resolution, IdentityError> {
    let (local, domain) = split_email(email)?;
    let full = format!("{local}@{domain}");
    let id = map
        .email_overrides
        .get(&full)
        .or_else(|| map.domain_rules.get(&domain));
    Ok(match id {
        Some(id) => Resolution::Resolved(map.stakeholder(id)),
        None => Resolution::Unresolved(email.trim().to_string()),
    })
}

/// Every patch-author and reporter email occurrence that does not resolve,
/// with counts, sorted by descending count then email. Malformed addresses
/// are listed too since they can never resolve.
pub fn unresolved_report(corpus: &[IssueRecord], map: &AffiliationMap) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let emails = corpus.iter().flat_map(|issue| {
        std::iter::once(issue.reporter_email.as_str())
            .chain(issue.patches.iter().map(|p| p.author_email.as_str()))
    });
    for email in emails {
        if !matches!(resolve(email, map), Ok(Resolution::Resolved(_))) {
            *counts.entry(email).or_default() += 1;
        }
    }
    let mut report: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(e, c)| (e.to_string(), c))
        .collect();
    report.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, IssueType, Patch};

    fn map() -> AffiliationMap {
        AffiliationMap::from_json(
            r#"{"domains": {"hortonworks.com": "hortonworks", "Cloudera.com": "Cloudera"},
                "overrides": {"bob@apache.org": "yahoo"},
                "categories": {"hortonworks": "product_provider"}}"#,
        )
        .unwrap()
    }

    fn id(s: &str) -> StakeholderId {
        StakeholderId::new(s).unwrap()
    }

    fn issue(key: &str, reporter: &str, authors: &[&str]) -> IssueRecord {
        let t = parse_timestamp("2015-01-01T00:00:00Z").unwrap();
        IssueRecord {
            key: key.into(),
            issue_type: IssueType::Bug,
            fix_versions: vec![],
            created_at: t,
            resolved_at: None,
            reporter_email: reporter.into(),
            patches: authors.iter().map(|a| Patch::new(*a, 1, 0, t)).collect(),
        }
    }

    #[test]
    fn domain_rule() {
        let r = resolve("alice@hortonworks.com", &map()).unwrap();
        let Resolution::Resolved(s) = r else {
            panic!("unresolved")
        };
        assert_eq!(s.id, id("hortonworks"));
        assert_eq!(s.user_category, UserCategory::ProductProvider);
    }

    #[test]
    fn override_beats_everything() {
        let r = resolve("bob@apache.org", &map()).unwrap();
        assert!(matches!(r, Resolution::Resolved(s) if s.id == id("yahoo")));
        let with_apache = map().with_domain("apache.org", "asf").unwrap();
        let r = resolve("bob@apache.org", &with_apache).unwrap();
        assert!(matches!(r, Resolution::Resolved(s) if s.id == id("yahoo")));
        let r = resolve("eve@apache.org", &with_apache).unwrap();
        assert!(matches!(r, Resolution::Resolved(s) if s.id == id("asf")));
    }

    #[test]
    fn unresolved_and_case_insensitive() {
        assert_eq!(
            resolve("carol@gmail.com", &map()).unwrap(),
            Resolution::Unresolved("carol@gmail.com".into())
        );
        let r = resolve("Dan@CLOUDERA.com", &map()).unwrap();
        assert!(matches!(r, Resolution::Resolved(s) if s.id == id("cloudera")));
        assert_eq!(map().category(&id("cloudera")), UserCategory::Unknown);
    }

    #[test]
    fn no_subdomain_inference() {
        let r = resolve("x@corp.hortonworks.com", &map()).unwrap();
        assert!(matches!(r, Resolution::Unresolved(_)));
    }

    #[test]
    fn invalid_emails() {
        for bad in ["nobody", "a@b@c", "@x.com", "x@", "a b@x.com"] {
            assert!(
                matches!(resolve(bad, &map()), Err(IdentityError::InvalidEmail(_))),
                "{bad}"
            );
        }
        assert_eq!(
            map().stakeholder_id_for("nobody"),
            StakeholderId::unaffiliated()
        );
    }

    #[test]
    fn report_counts_and_orders() {
        let corpus = vec![
            issue(
                "A-1",
                "alice@hortonworks.com",
                &["x@gmail.com", "x@gmail.com"],
            ),
            issue(
                "A-2",
                "alice@hortonworks.com",
                &["x@gmail.com", "y@gmail.com"],
            ),
        ];
        assert_eq!(
            unresolved_report(&corpus, &map()),
            vec![
                ("x@gmail.com".to_string(), 3),
                ("y@gmail.com".to_string(), 1)
            ]
        );
        let resolved = vec![issue("A-3", "alice@hortonworks.com", &["bob@apache.org"])];
        assert!(unresolved_report(&resolved, &map()).is_empty());
    }

    #[test]
    fn report_tie_break_is_lexicographic() {
        let corpus = vec![issue(
            "A-1",
            "z@gmail.com",
            &["z@gmail.com", "b@gmail.com", "b@gmail.com"],
        )];
        assert_eq!(
            unresolved_report(&corpus, &map()),
            vec![
                ("b@gmail.com".to_string(), 2),
                ("z@gmail.com".to_string(), 2)
            ]
        );
    }

    #[test]
    fn registry_and_config_errors() {
        let reg = map().registry();
        assert!(reg.contains(&id("yahoo")) && reg.contains(&id("hortonworks")));
        assert!(AffiliationMap::from_json(r#"{"domains": {"x.com": ""}}"#).is_err());
        assert!(AffiliationMap::from_json(r#"{"categories": {"x": "wizard"}}"#).is_err());
        assert!(AffiliationMap::from_json(r#"{"domain": {}}"#).is_err());
        assert_eq!(
            AffiliationMap::from_json("{}").unwrap(),
            AffiliationMap::new()
        );
    }
}
