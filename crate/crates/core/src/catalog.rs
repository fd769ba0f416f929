//! Fixed attribute taxonomies used during entity creation.
//!
//! The age bands, occupation list, and business categories are documented
//! assumptions (see `docs/configuration.md`); the high-risk subsets drive
//! risk scoring and cluster assignment. Country weights live in the graph
//! config so they can be overridden per run.

use serde::{Deserialize, Serialize};

/// Age bands for individuals. The 18-24 and 65+ bands are the ones the
/// mule-recruitment selection logic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    #[serde(rename = "18-24")]
    From18To24,
    #[serde(rename = "25-34")]
    From25To34,
    #[serde(rename = "35-49")]
    From35To49,
    #[serde(rename = "50-64")]
    From50To64,
    #[serde(rename = "65+")]
    Over65,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 5] = [
        AgeGroup::From18To24,
        AgeGroup::From25To34,
        AgeGroup::From35To49,
        AgeGroup::From50To64,
        AgeGroup::Over65,
    ];

    /// Sampling weights roughly matching an adult population pyramid.
    pub const WEIGHTS: [f64; 5] = [0.12, 0.22, 0.28, 0.23, 0.15];

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::From18To24 => "18-24",
            AgeGroup::From25To34 => "25-34",
            AgeGroup::From35To49 => "35-49",
            AgeGroup::From50To64 => "50-64",
            AgeGroup::Over65 => "65+",
        }
    }

    pub fn is_high_risk(self) -> bool {
        matches!(self, AgeGroup::From18To24 | AgeGroup::Over65)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

/// One occupation entry. `high_risk` marks finance-adjacent or high-paid
/// occupations associated with elevated laundering risk; `high_paid` marks
/// the subset eligible for high-value background transactions.
#[derive(Debug, Clone, Copy)]
pub struct Occupation {
    pub name: &'static str,
    pub high_risk: bool,
    pub high_paid: bool,
}

pub const OCCUPATIONS: &[Occupation] = &[
    Occupation {
        name: "teacher",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "nurse",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "retail_clerk",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "driver",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "electrician",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "chef",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "office_administrator",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "warehouse_operative",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "student",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "retired",
        high_risk: false,
        high_paid: false,
    },
    Occupation {
        name: "software_engineer",
        high_risk: false,
        high_paid: true,
    },
    Occupation {
        name: "physician",
        high_risk: false,
        high_paid: true,
    },
    Occupation {
        name: "executive",
        high_risk: false,
        high_paid: true,
    },
    Occupation {
        name: "accountant",
        high_risk: true,
        high_paid: true,
    },
    Occupation {
        name: "lawyer",
        high_risk: true,
        high_paid: true,
    },
    Occupation {
        name: "financial_advisor",
        high_risk: true,
        high_paid: true,
    },
    Occupation {
        name: "real_estate_agent",
        high_risk: true,
        high_paid: true,
    },
    Occupation {
        name: "currency_exchange_agent",
        high_risk: true,
        high_paid: false,
    },
    Occupation {
        name: "casino_worker",
        high_risk: true,
        high_paid: false,
    },
    Occupation {
        name: "precious_metals_dealer",
        high_risk: true,
        high_paid: false,
    },
    Occupation {
        name: "art_dealer",
        high_risk: true,
        high_paid: true,
    },
];

/// One business category entry; `cash_intensive` feeds the corresponding
/// risk factor and cluster.
#[derive(Debug, Clone, Copy)]
pub struct BusinessCategory {
    pub name: &'static str,
    pub cash_intensive: bool,
}

pub const BUSINESS_CATEGORIES: &[BusinessCategory] = &[
    BusinessCategory {
        name: "software_services",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "consulting",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "manufacturing",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "logistics",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "wholesale_trade",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "construction",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "healthcare_services",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "online_retail",
        cash_intensive: false,
    },
    BusinessCategory {
        name: "restaurant",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "bar",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "convenience_store",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "car_wash",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "nail_salon",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "laundromat",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "vending_operator",
        cash_intensive: true,
    },
    BusinessCategory {
        name: "used_car_dealer",
        cash_intensive: true,
    },
];

/// Account categories exported in `account_category`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountCategory {
    Current,
    Savings,
    Cash,
    BusinessCurrent,
    MoneyMarket,
}

impl AccountCategory {
    pub fn label(self) -> &'static str {
        match self {
            AccountCategory::Current => "current",
            AccountCategory::Savings => "savings",
            AccountCategory::Cash => "cash",
            AccountCategory::BusinessCurrent => "business_current",
            AccountCategory::MoneyMarket => "money_market",
        }
    }
}

/// Name pools for individuals; names are generated but masked from exports.
pub const FIRST_NAMES: &[&str] = &[
    "Alex", "Bianca", "Carlos", "Dana", "Elena", "Farid", "Grace", "Hugo", "Ines", "Jonas", "Kira",
    "Liam", "Marta", "Noah", "Olive", "Pavel", "Quinn", "Rosa", "Sven", "Tara", "Umar", "Vera",
    "Wim", "Xenia", "Yusuf", "Zoe",
];

pub const LAST_NAMES: &[&str] = &[
    "Andersen", "Bauer", "Costa", "Dubois", "Eriksen", "Fischer", "Garcia", "Hansen", "Ivanov",
    "Jansen", "Keller", "Lopez", "Meyer", "Novak", "Olsen", "Peeters", "Quiroga", "Rossi",
    "Schmidt", "Tanaka", "Ueda", "Visser", "Weber", "Xu", "Yilmaz", "Zhang",
];

/// Default country mix: weights are sampling probabilities (normalized on
/// load) and `high_risk` marks jurisdictions feeding the corresponding
/// cluster and risk factor.
pub fn default_country_table() -> Vec<(String, bool, f64)> {
    [
        ("US", false, 0.29),
        ("GB", false, 0.12),
        ("DE", false, 0.11),
        ("FR", false, 0.09),
        ("NL", false, 0.08),
        ("ES", false, 0.06),
        ("IT", false, 0.06),
        ("CA", false, 0.05),
        ("AU", false, 0.04),
        ("CH", false, 0.03),
        ("PA", true, 0.02),
        ("KY", true, 0.015),
        ("AE", true, 0.015),
        ("VG", true, 0.01),
        ("CY", true, 0.01),
    ]
    .iter()
    .map(|(c, hr, w)| (c.to_string(), *hr, *w))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_risk_occupations_exist() {
        assert!(OCCUPATIONS.iter().any(|o| o.high_risk));
        assert!(OCCUPATIONS.iter().any(|o| o.high_paid));
        assert!(OCCUPATIONS.iter().any(|o| !o.high_risk && !o.high_paid));
    }

    #[test]
    fn default_countries_include_high_risk() {
        let table = default_country_table();
        assert!(table.iter().any(|(_, hr, _)| *hr));
        let total: f64 = table.iter().map(|(_, _, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn age_band_flags() {
        assert!(AgeGroup::From18To24.is_high_risk());
        assert!(AgeGroup::Over65.is_high_risk());
        assert!(!AgeGroup::From35To49.is_high_risk());
    }
}
