//! Closed object and relation vocabularies.
//!
//! Relations are split into three disjoint partitions (attention, spatial,
//! contact). The default instance is the Action Genome label set in the
//! order the prompts enumerate it.

use std::collections::HashMap;
use std::fmt;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Placeholder class listed first in the prompt's object line. Never a valid object.
pub const BACKGROUND_CLASS: &str = "__background__";

/// The subject of every triple.
pub const PERSON_CLASS: &str = "person";

const AG_OBJECTS: &[&str] = &[
    "person",
    "bag",
    "bed",
    "blanket",
    "book",
    "box",
    "broom",
    "chair",
    "closet/cabinet",
    "clothes",
    "cup/glass/bottle",
    "dish",
    "door",
    "doorknob",
    "doorway",
    "floor",
    "food",
    "groceries",
    "laptop",
    "light",
    "medicine",
    "mirror",
    "paper/notebook",
    "phone/camera",
    "picture",
    "pillow",
    "refrigerator",
    "sandwich",
    "shelf",
    "shoe",
    "sofa/couch",
    "table",
    "television",
    "towel",
    "vacuum",
    "window",
];

const AG_ATTENTION: &[&str] = &["looking_at", "not_looking_at", "unsure"];

const AG_SPATIAL: &[&str] = &[
    "above",
    "beneath",
    "in_front_of",
    "behind",
    "on_the_side_of",
    "in",
];

const AG_CONTACT: &[&str] = &[
    "carrying",
    "covered_by",
    "drinking_from",
    "eating",
    "have_it_on_the_back",
    "holding",
    "leaning_on",
    "lying_on",
    "not_contacting",
    "other_relationship",
    "sitting_on",
    "standing_on",
    "touching",
    "twisting",
    "wearing",
    "wiping",
    "writing_on",
];

static ACTION_GENOME: Lazy<Vocabulary> = Lazy::new(|| {
    Vocabulary::new(
        AG_OBJECTS.iter().map(|s| s.to_string()).collect(),
        AG_ATTENTION.iter().map(|s| s.to_string()).collect(),
        AG_SPATIAL.iter().map(|s| s.to_string()).collect(),
        AG_CONTACT.iter().map(|s| s.to_string()).collect(),
    )
    .expect("built-in vocabulary is well formed")
});

/// One of the three relation partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Attention,
    Spatial,
    Contact,
}

impl Partition {
    /// Partitions in the order they appear in text and in triple generation.
    pub const ALL: [Partition; 3] = [Partition::Attention, Partition::Spatial, Partition::Contact];

    pub fn keyword(self) -> &'static str {
        match self {
            Partition::Attention => "attention",
            Partition::Spatial => "spatial",
            Partition::Contact => "contact",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Object classes plus the partitioned relation classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyDef", into = "VocabularyDef")]
pub struct Vocabulary {
    objects: Vec<String>,
    attention: Vec<String>,
    spatial: Vec<String>,
    contact: Vec<String>,
    object_index: HashMap<String, usize>,
    relation_index: HashMap<String, (Partition, usize)>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyDef {
    objects: Vec<String>,
    attention_relations: Vec<String>,
    spatial_relations: Vec<String>,
    contact_relations: Vec<String>,
}

impl TryFrom<VocabularyDef> for Vocabulary {
    type Error = GraphError;

    fn try_from(def: VocabularyDef) -> Result<Self, Self::Error> {
        Vocabulary::new(
            def.objects,
            def.attention_relations,
            def.spatial_relations,
            def.contact_relations,
        )
    }
}

impl From<Vocabulary> for VocabularyDef {
    fn from(v: Vocabulary) -> Self {
        VocabularyDef {
            objects: v.objects,
            attention_relations: v.attention,
            spatial_relations: v.spatial,
            contact_relations: v.contact,
        }
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::action_genome().clone()
    }
}

impl Vocabulary {
    /// Builds a vocabulary, rejecting duplicate names and overlapping partitions.
    pub fn new(
        objects: Vec<String>,
        attention: Vec<String>,
        spatial: Vec<String>,
        contact: Vec<String>,
    ) -> Result<Self, GraphError> {
        let mut object_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if object_index.insert(o.clone(), i).is_some() {
                return Err(GraphError::InvalidVocabulary(format!("duplicate object `{o}`")));
            }
        }
        let mut relation_index = HashMap::new();
        for (partition, names) in [
            (Partition::Attention, &attention),
            (Partition::Spatial, &spatial),
            (Partition::Contact, &contact),
        ] {
            for (i, r) in names.iter().enumerate() {
                if let Some((other, _)) = relation_index.insert(r.clone(), (partition, i)) {
                    return Err(GraphError::InvalidVocabulary(format!(
                        "relation `{r}` listed under both {other} and {partition}"
                    )));
                }
            }
        }
        Ok(Self {
            objects,
            attention,
            spatial,
            contact,
            object_index,
            relation_index,
        })
    }

    /// The Action Genome label set.
    pub fn action_genome() -> &'static Vocabulary {
        &ACTION_GENOME
    }

    /// Object classes, starting with `person`.
    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    /// Object classes other than the human subject.
    pub fn object_classes(&self) -> impl Iterator<Item = &str> {
        self.objects
            .iter()
            .map(String::as_str)
            .filter(|o| *o != PERSON_CLASS)
    }

    pub fn relations(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::Attention => &self.attention,
            Partition::Spatial => &self.spatial,
            Partition::Contact => &self.contact,
        }
    }

    /// All relation names in partition order.
    pub fn all_relations(&self) -> impl Iterator<Item = &str> {
        Partition::ALL
            .into_iter()
            .flat_map(move |p| self.relations(p).iter().map(String::as_str))
    }

    pub fn relation_count(&self) -> usize {
        self.attention.len() + self.spatial.len() + self.contact.len()
    }

    pub fn is_object(&self, name: &str) -> bool {
        self.object_index.contains_key(name)
    }

    pub fn object_position(&self, name: &str) -> Option<usize> {
        self.object_index.get(name).copied()
    }

    pub fn partition_of(&self, relation: &str) -> Option<Partition> {
        self.relation_index.get(relation).map(|(p, _)| *p)
    }

    /// Position of a relation inside its own partition.
    pub fn relation_position(&self, relation: &str) -> Option<usize> {
        self.relation_index.get(relation).map(|(_, i)| *i)
    }

    /// Global index of a relation across partitions (attention first).
    pub fn relation_id(&self, relation: &str) -> Option<usize> {
        let (p, i) = *self.relation_index.get(relation)?;
        let offset = match p {
            Partition::Attention => 0,
            Partition::Spatial => self.attention.len(),
            Partition::Contact => self.attention.len() + self.spatial.len(),
        };
        Some(offset + i)
    }

    /// Sorts relation names into this vocabulary's partition order.
    pub fn canonical_order(&self, relations: &[String]) -> Vec<String> {
        let mut out = relations.to_vec();
        out.sort_by_key(|r| self.relation_position(r).unwrap_or(usize::MAX));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let v = Vocabulary::action_genome();
        assert_eq!(v.objects().len(), 36);
        assert_eq!(v.object_classes().count(), 35);
        assert_eq!(v.relations(Partition::Attention).len(), 3);
        assert_eq!(v.relations(Partition::Spatial).len(), 6);
        assert_eq!(v.relations(Partition::Contact).len(), 17);
        // 26 names are enumerated even though the dataset is described as 25 classes.
        assert_eq!(v.relation_count(), 26);
        assert_eq!(v.objects().first().map(String::as_str), Some("person"));
        assert_eq!(v.objects().last().map(String::as_str), Some("window"));
        assert!(!v.is_object(BACKGROUND_CLASS));
    }

    #[test]
    fn lookup_is_exact() {
        let v = Vocabulary::action_genome();
        assert!(v.is_object("cup/glass/bottle"));
        assert!(!v.is_object("Cup/Glass/Bottle"));
        assert!(!v.is_object("spoon"));
        assert_eq!(v.partition_of("not_looking_at"), Some(Partition::Attention));
        assert_eq!(v.partition_of("not looking at"), None);
        assert_eq!(v.partition_of("holding"), Some(Partition::Contact));
        assert_eq!(v.partition_of("in"), Some(Partition::Spatial));
    }

    #[test]
    fn partitions_are_disjoint() {
        let err = Vocabulary::new(
            vec!["a".into()],
            vec!["x".into()],
            vec!["x".into()],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::InvalidVocabulary(_)));
    }

    #[test]
    fn relation_ids_are_dense() {
        let v = Vocabulary::action_genome();
        let ids: Vec<_> = v.all_relations().map(|r| v.relation_id(r).unwrap()).collect();
        assert_eq!(ids, (0..26).collect::<Vec<_>>());
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocabulary::action_genome();
        let json = serde_json::to_string(v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, v);
    }
}
