//! Relation labels in the SemEval-2010 Task 8 inventory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// The nine directed relation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationType {
    CauseEffect,
    ComponentWhole,
    ContentContainer,
    EntityDestination,
    EntityOrigin,
    InstrumentAgency,
    MemberCollection,
    MessageTopic,
    ProductProducer,
}

impl RelationType {
    pub const ALL: [RelationType; 9] = [
        RelationType::CauseEffect,
        RelationType::ComponentWhole,
        RelationType::ContentContainer,
        RelationType::EntityDestination,
        RelationType::EntityOrigin,
        RelationType::InstrumentAgency,
        RelationType::MemberCollection,
        RelationType::MessageTopic,
        RelationType::ProductProducer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::CauseEffect => "Cause-Effect",
            RelationType::ComponentWhole => "Component-Whole",
            RelationType::ContentContainer => "Content-Container",
            RelationType::EntityDestination => "Entity-Destination",
            RelationType::EntityOrigin => "Entity-Origin",
            RelationType::InstrumentAgency => "Instrument-Agency",
            RelationType::MemberCollection => "Member-Collection",
            RelationType::MessageTopic => "Message-Topic",
            RelationType::ProductProducer => "Product-Producer",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

/// Which entity is the first argument of the relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    E1ToE2,
    E2ToE1,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::E1ToE2, Direction::E2ToE1];

    fn suffix(self) -> &'static str {
        match self {
            Direction::E1ToE2 => "(e1,e2)",
            Direction::E2ToE1 => "(e2,e1)",
        }
    }
}

/// A directed relation or `Other`.
///
/// The canonical string forms are `Type(e1,e2)`, `Type(e2,e1)` and `Other`.
/// Parsing is exact and case-sensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationLabel {
    Directed {
        kind: RelationType,
        direction: Direction,
    },
    Other,
}

impl RelationLabel {
    pub const OTHER_STR: &'static str = "Other";

    pub fn directed(kind: RelationType, direction: Direction) -> Self {
        RelationLabel::Directed { kind, direction }
    }

    /// All 19 labels: the 18 directed ones in type order, then `Other`.
    pub fn all() -> Vec<RelationLabel> {
        let mut out = Vec::with_capacity(19);
        for kind in RelationType::ALL {
            for direction in Direction::BOTH {
                out.push(RelationLabel::Directed { kind, direction });
            }
        }
        out.push(RelationLabel::Other);
        out
    }

    pub fn kind(&self) -> Option<RelationType> {
        match self {
            RelationLabel::Directed { kind, .. } => Some(*kind),
            RelationLabel::Other => None,
        }
    }

    pub fn direction(&self) -> Option<Direction> {
        match self {
            RelationLabel::Directed { direction, .. } => Some(*direction),
            RelationLabel::Other => None,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, RelationLabel::Other)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationLabel::Directed { kind, direction } => {
                write!(f, "{}{}", kind.as_str(), direction.suffix())
            }
            RelationLabel::Other => f.write_str(Self::OTHER_STR),
        }
    }
}

impl FromStr for RelationLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::OTHER_STR {
            return Ok(RelationLabel::Other);
        }
        let unknown = || CorpusError::UnknownLabel(s.to_string());
        let open = s.find('(').ok_or_else(unknown)?;
        let (name, suffix) = s.split_at(open);
        let kind: RelationType = name.parse().map_err(|_| unknown())?;
        let direction = Direction::BOTH
            .into_iter()
            .find(|d| d.suffix() == suffix)
            .ok_or_else(unknown)?;
        Ok(RelationLabel::Directed { kind, direction })
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
