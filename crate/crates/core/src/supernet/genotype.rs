use std::fmt;

use serde::{Deserialize, Serialize};

use crate::opspace::{AggOpKind, FuserKind, GateKind};

/// A discrete architecture: one aggregator per layer, a gate for each of the
/// first `L - 1` layers and one fuser, plus where it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genotype {
    pub layers: Vec<AggOpKind>,
    pub gates: Vec<GateKind>,
    pub fuser: FuserKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Genotype {
    pub fn new(layers: Vec<AggOpKind>, gates: Vec<GateKind>, fuser: FuserKind) -> Self {
        Genotype {
            layers,
            gates,
            fuser,
            criterion: None,
            seed: None,
            source: None,
        }
    }

    /// `L` copies of one aggregator, every gate open, concatenation fuser.
    pub fn uniform(kind: AggOpKind, layers: usize) -> Self {
        Genotype::new(
            vec![kind; layers],
            vec![GateKind::Skip; layers.saturating_sub(1)],
            FuserKind::Concat,
        )
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Same architecture, ignoring provenance.
    pub fn same_architecture(&self, other: &Genotype) -> bool {
        self.layers == other.layers && self.gates == other.gates && self.fuser == other.fuser
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layers: Vec<&str> = self.layers.iter().map(|k| k.name()).collect();
        let gates: Vec<&str> = self.gates.iter().map(|g| g.name()).collect();
        write!(f, "[{}] gates [{}] fuser {}", layers.join(", "), gates.join(", "), self.fuser)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_uses_catalog_names() {
        let mut g = Genotype::new(
            vec![AggOpKind::Fagcn, AggOpKind::Gcnii, AggOpKind::Sgc],
            vec![GateKind::Skip, GateKind::Zero],
            FuserKind::Concat,
        );
        g.criterion = Some("hete_argmin".into());
        g.seed = Some(7);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(
            json,
            r#"{"layers":["FAGCN","GCNII","SGC"],"gates":["l_skip","l_zero"],"fuser":"l_concat","criterion":"hete_argmin","seed":7}"#
        );
        assert_eq!(serde_json::from_str::<Genotype>(&json).unwrap(), g);
    }
}
