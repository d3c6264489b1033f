use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::IngestError;
use crate::graph::EdgeKind;

/// 24-bit RGB color as written in yEd styles (`#RRGGBB`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    fn distance2(self, other: Rgb) -> u32 {
        self.0
            .iter()
            .zip(other.0)
            .map(|(a, b)| (i32::from(*a) - i32::from(b)).pow(2) as u32)
            .sum()
    }
}

impl FromStr for Rgb {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::ColorMap(format!("`{s}` is not a #RRGGBB color"));
        let hex = s.trim().strip_prefix('#').ok_or_else(bad)?;
        // yEd may append an alpha channel.
        if !(hex.len() == 6 || hex.len() == 8) || !hex.is_ascii() {
            return Err(bad());
        }
        let mut rgb = [0u8; 3];
        for (i, c) in rgb.iter_mut().enumerate() {
            *c = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(Rgb(rgb))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColorMatch {
    #[default]
    Exact,
    /// Fall back to the closest mapped color (Euclidean distance in RGB).
    Nearest,
}

/// Edge color to kind mapping. Always covers all three kinds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorMap {
    colors: BTreeMap<Rgb, EdgeKind>,
    pub matching: ColorMatch,
}

impl Default for ColorMap {
    fn default() -> Self {
        let colors = [
            (Rgb([0, 0, 0]), EdgeKind::Required),
            (Rgb([0, 0x80, 0]), EdgeKind::Optional),
            (Rgb([0xFF, 0, 0]), EdgeKind::Alternative),
        ];
        ColorMap {
            colors: colors.into_iter().collect(),
            matching: ColorMatch::Exact,
        }
    }
}

impl ColorMap {
    /// Parses overrides such as `optional=#00FF00,alternative=#CC0000`.
    /// A kind named in the mapping loses its default colors; a kind may be
    /// named several times to map several colors.
    pub fn parse(spec: &str) -> Result<Self, IngestError> {
        let mut map = ColorMap::default();
        let mut replaced = Vec::new();
        for entry in spec.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (kind, color) = entry
                .split_once('=')
                .ok_or_else(|| IngestError::ColorMap(format!("`{entry}` is not kind=#RRGGBB")))?;
            let kind = match kind.trim() {
                "required" => EdgeKind::Required,
                "optional" => EdgeKind::Optional,
                "alternative" => EdgeKind::Alternative,
                other => return Err(IngestError::ColorMap(format!("unknown edge kind `{other}`"))),
            };
            let color: Rgb = color.parse()?;
            if !replaced.contains(&kind) {
                map.colors.retain(|_, k| *k != kind);
                replaced.push(kind);
            }
            map.colors.insert(color, kind);
        }
        for kind in [EdgeKind::Required, EdgeKind::Optional, EdgeKind::Alternative] {
            if !map.colors.values().any(|k| *k == kind) {
                return Err(IngestError::ColorMap(format!("no color left for {kind}")));
            }
        }
        Ok(map)
    }

    pub fn with_matching(mut self, matching: ColorMatch) -> Self {
        self.matching = matching;
        self
    }

    pub fn kind_of(&self, color: Rgb) -> Option<EdgeKind> {
        if let Some(k) = self.colors.get(&color) {
            return Some(*k);
        }
        match self.matching {
            ColorMatch::Exact => None,
            ColorMatch::Nearest => self
                .colors
                .iter()
                .min_by_key(|(c, _)| c.distance2(color))
                .map(|(_, k)| *k),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (Rgb, EdgeKind)> + '_ {
        self.colors.iter().map(|(c, k)| (*c, *k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let m = ColorMap::default();
        assert_eq!(m.kind_of("#000000".parse().unwrap()), Some(EdgeKind::Required));
        assert_eq!(m.kind_of("#008000".parse().unwrap()), Some(EdgeKind::Optional));
        assert_eq!(m.kind_of("#ff0000".parse().unwrap()), Some(EdgeKind::Alternative));
        assert_eq!(m.kind_of("#800080".parse().unwrap()), None);
    }

    #[test]
    fn nearest() {
        let m = ColorMap::default().with_matching(ColorMatch::Nearest);
        assert_eq!(m.kind_of("#00A000".parse().unwrap()), Some(EdgeKind::Optional));
        assert_eq!(m.kind_of("#E01010".parse().unwrap()), Some(EdgeKind::Alternative));
    }

    #[test]
    fn overrides_replace_kind_defaults() {
        let m = ColorMap::parse("optional=#00FF00, optional=#33CC33").unwrap();
        assert_eq!(m.kind_of("#008000".parse().unwrap()), None);
        assert_eq!(m.kind_of("#33cc33".parse().unwrap()), Some(EdgeKind::Optional));
        assert_eq!(m.kind_of("#000000".parse().unwrap()), Some(EdgeKind::Required));
        assert!(ColorMap::parse("purple=#800080").is_err());
        assert!(ColorMap::parse("optional=#000000").is_err());
        assert_eq!(Rgb([255, 0, 16]).to_string(), "#FF0010");
        assert_eq!("#FF000080".parse::<Rgb>().unwrap(), Rgb([255, 0, 0]));
    }
}
