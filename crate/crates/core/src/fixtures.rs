//! Small hand-checkable decision problems with closed-form answers.

use crate::model::{
    to_document, AttributeSpec, Case, CaseBase, CaseBaseDocument, Polarities, Polarity, Query,
    SimilarityFamily, UtilityDocument, UtilityModel,
};

/// A complete decision problem: one partner's case base, the current
/// situation and the negotiator's utility.
#[derive(Debug, Clone)]
pub struct Instance {
    pub case_base: CaseBase,
    pub query: Query,
    pub utility: UtilityModel,
}

impl Instance {
    pub fn polarities(&self) -> Polarities {
        self.case_base.polarities()
    }

    pub fn case_base_document(&self) -> CaseBaseDocument {
        to_document(&self.case_base, &self.query)
    }

    pub fn utility_document(&self) -> UtilityDocument {
        UtilityDocument {
            weights: self.utility.weights().to_vec(),
        }
    }
}

fn linear_attr(name: &str, polarity: Polarity) -> AttributeSpec {
    AttributeSpec::new(name, polarity, SimilarityFamily::linear(0.5).unwrap())
}

/// One positive attribute, one case at 0.5 with strength `s`, linear λ = 0.5,
/// identity utility.
pub fn fixture_a_with_strength(s: f64) -> Instance {
    let case_base = CaseBase::new(
        Vec::new(),
        vec![linear_attr("y", Polarity::Positive)],
        vec![Case::with_similarity(vec![0.5], s)],
    )
    .unwrap();
    Instance {
        case_base,
        query: Query::empty(),
        utility: UtilityModel::new(vec![1.0]).unwrap(),
    }
}

/// Fixture A: the optimum sits where `u(y) = y` meets `π(y) = 2 − 2y`, at 2/3.
pub fn fixture_a() -> Instance {
    fixture_a_with_strength(1.0)
}

/// Fixture B: two attributes with polarities (1, 0) and two cases; the
/// optimum is 11/15 at (11/15, 4/15).
pub fn fixture_b() -> Instance {
    let case_base = CaseBase::new(
        Vec::new(),
        vec![
            linear_attr("y1", Polarity::Positive),
            linear_attr("y2", Polarity::Negative),
        ],
        vec![
            Case::with_similarity(vec![0.6, 0.4], 1.0),
            Case::with_similarity(vec![0.8, 0.7], 0.8),
        ],
    )
    .unwrap();
    Instance {
        case_base,
        query: Query::empty(),
        utility: UtilityModel::new(vec![0.5, 0.5]).unwrap(),
    }
}

/// A single case with strength 0.5 at the best corner: the answer is capped by
/// the situation similarity, so the optimum is exactly 0.5 at y = 1.
pub fn s_capped() -> Instance {
    let case_base = CaseBase::new(
        Vec::new(),
        vec![linear_attr("y", Polarity::Positive)],
        vec![Case::with_similarity(vec![1.0], 0.5)],
    )
    .unwrap();
    Instance {
        case_base,
        query: Query::empty(),
        utility: UtilityModel::new(vec![1.0]).unwrap(),
    }
}
