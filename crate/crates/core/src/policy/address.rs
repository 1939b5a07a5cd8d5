//! Exact addresses, geotag coordinates and containment regions.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Returns `None` unless both coordinates are finite and in range.
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let p = GeoPoint { lat, lon };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite() && self.lon.is_finite() && (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }

    /// Planar distance in degrees. Adequate at address granularity.
    pub fn planar_distance(&self, other: &GeoPoint) -> f64 {
        (self.lat - other.lat).hypot(self.lon - other.lon)
    }
}

/// Whether a stored point matches a query point for point-only lookups.
pub fn point_matches(stored: &GeoPoint, query: &GeoPoint, epsilon: f64) -> bool {
    stored.planar_distance(query) <= epsilon
}

/// Axis-aligned lat/lon bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: GeoPoint,
    pub max: GeoPoint,
}

impl BBox {
    pub fn from_point(p: GeoPoint) -> Self {
        BBox { min: p, max: p }
    }

    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        p.lat >= self.min.lat && p.lat <= self.max.lat && p.lon >= self.min.lon && p.lon <= self.max.lon
    }

    pub fn contains_bbox(&self, other: &BBox) -> bool {
        self.contains_point(&other.min) && self.contains_point(&other.max)
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min: GeoPoint { lat: self.min.lat.min(other.min.lat), lon: self.min.lon.min(other.min.lon) },
            max: GeoPoint { lat: self.max.lat.max(other.max.lat), lon: self.max.lon.max(other.max.lon) },
        }
    }

    pub fn expanded(&self, margin: f64) -> BBox {
        BBox {
            min: GeoPoint { lat: self.min.lat - margin, lon: self.min.lon - margin },
            max: GeoPoint { lat: self.max.lat + margin, lon: self.max.lon + margin },
        }
    }

    /// Union of optional boxes, treating `None` as empty.
    pub fn merge(a: Option<BBox>, b: Option<BBox>) -> Option<BBox> {
        match (a, b) {
            (Some(a), Some(b)) => Some(a.union(&b)),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

fn normalized_arc(s: &str) -> Arc<str> {
    Arc::from(normalize_text(s))
}

/// A postal address, normalized on construction.
///
/// Finer fields may be empty, in which case the address names a region
/// (a whole city, state or nation) rather than a single place. Ordering
/// is by nation, state, city, then street, so addresses sharing an
/// administrative prefix sort next to each other.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "AddressDocument", into = "AddressDocument")]
pub struct ExactAddress {
    nation: Arc<str>,
    state: Arc<str>,
    city: Arc<str>,
    street: Arc<str>,
    point: Option<GeoPoint>,
}

impl ExactAddress {
    pub fn new(street: &str, city: &str, state: &str, nation: &str) -> Self {
        ExactAddress {
            nation: normalized_arc(nation),
            state: normalized_arc(state),
            city: normalized_arc(city),
            street: normalized_arc(street),
            point: None,
        }
    }

    /// Build from already-normalized shared strings without copying them.
    ///
    /// Falls back to normalizing when any field is not in normal form.
    pub fn from_shared(street: Arc<str>, city: Arc<str>, state: Arc<str>, nation: Arc<str>) -> Self {
        let fix = |s: Arc<str>| if normalize_text(&s) == *s { s } else { normalized_arc(&s) };
        ExactAddress { nation: fix(nation), state: fix(state), city: fix(city), street: fix(street), point: None }
    }

    pub fn with_point(mut self, point: GeoPoint) -> Self {
        self.point = Some(point);
        self
    }

    pub fn street(&self) -> &str {
        &self.street
    }
    pub fn city(&self) -> &str {
        &self.city
    }
    pub fn state(&self) -> &str {
        &self.state
    }
    pub fn nation(&self) -> &str {
        &self.nation
    }
    pub fn point(&self) -> Option<GeoPoint> {
        self.point
    }

    /// Nation present, no finer field without its coarser parent, point valid.
    pub fn is_well_formed(&self) -> bool {
        !self.nation.is_empty()
            && (!self.state.is_empty() || self.city.is_empty())
            && (!self.city.is_empty() || self.street.is_empty())
            && self.point.is_none_or(|p| p.is_valid())
    }

    /// Number of populated fields, from nation down.
    pub fn depth(&self) -> usize {
        [&self.nation, &self.state, &self.city, &self.street].iter().take_while(|f| !f.is_empty()).count()
    }

    /// True when every populated field of `self` equals the same field of `query`.
    ///
    /// A full street address covers only itself; a city-level address covers
    /// every address in that city.
    pub fn covers(&self, query: &ExactAddress) -> bool {
        fn field(p: &Arc<str>, q: &Arc<str>) -> bool {
            p.is_empty() || Arc::ptr_eq(p, q) || **p == **q
        }
        field(&self.nation, &query.nation)
            && field(&self.state, &query.state)
            && field(&self.city, &query.city)
            && field(&self.street, &query.street)
    }

    /// The first `depth` fields of this address, finer ones blanked. No point.
    pub fn prefix(&self, depth: usize) -> ExactAddress {
        let empty: Arc<str> = Arc::from("");
        let keep = |i: usize, s: &Arc<str>| if i < depth { s.clone() } else { empty.clone() };
        ExactAddress {
            nation: keep(0, &self.nation),
            state: keep(1, &self.state),
            city: keep(2, &self.city),
            street: keep(3, &self.street),
            point: None,
        }
    }

    /// Every non-empty prefix of this address, coarsest first, ending with itself.
    pub fn prefixes(&self) -> impl Iterator<Item = ExactAddress> + '_ {
        (1..=self.depth()).map(|d| self.prefix(d))
    }

    /// Key comparison ignoring the point.
    pub fn cmp_key(&self, other: &ExactAddress) -> Ordering {
        (&*self.nation, &*self.state, &*self.city, &*self.street).cmp(&(&*other.nation, &*other.state, &*other.city, &*other.street))
    }

    pub fn same_key(&self, other: &ExactAddress) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl PartialEq for ExactAddress {
    fn eq(&self, other: &Self) -> bool {
        self.same_key(other) && self.point == other.point
    }
}

impl fmt::Debug for ExactAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactAddress({:?}, {:?}, {:?}, {:?}", self.street, self.city, self.state, self.nation)?;
        if let Some(p) = self.point {
            write!(f, " @ {},{}", p.lat, p.lon)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ExactAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [&*self.street, &*self.city, &*self.state, &*self.nation].into_iter().filter(|s| !s.is_empty()).collect();
        f.write_str(&parts.join(", "))
    }
}

/// Wire form of an address: flat optional fields with `lat`/`lon`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AddressDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub street: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl AddressDocument {
    pub fn has_address_fields(&self) -> bool {
        self.street.is_some() || self.city.is_some() || self.state.is_some() || self.nation.is_some()
    }

    /// The coordinate pair, if both halves are given. A lone half is an error.
    pub fn point(&self) -> Result<Option<GeoPoint>, String> {
        match (self.lat, self.lon) {
            (None, None) => Ok(None),
            (Some(lat), Some(lon)) => GeoPoint::new(lat, lon).map(Some).ok_or_else(|| format!("coordinates out of range: {lat},{lon}")),
            _ => Err("lat and lon must be given together".into()),
        }
    }

    /// Address part only, without checking well-formedness.
    pub fn address(&self) -> Result<Option<ExactAddress>, String> {
        if !self.has_address_fields() {
            return Ok(None);
        }
        let get = |f: &Option<String>| f.as_deref().unwrap_or("").to_owned();
        let mut addr = ExactAddress::new(&get(&self.street), &get(&self.city), &get(&self.state), &get(&self.nation));
        addr.point = self.point()?;
        Ok(Some(addr))
    }
}

impl TryFrom<AddressDocument> for ExactAddress {
    type Error = String;

    fn try_from(doc: AddressDocument) -> Result<Self, Self::Error> {
        doc.address()?.ok_or_else(|| "address has no fields".to_owned())
    }
}

impl From<ExactAddress> for AddressDocument {
    fn from(a: ExactAddress) -> Self {
        let opt = |s: &Arc<str>| (!s.is_empty()).then(|| s.to_string());
        AddressDocument {
            street: opt(&a.street),
            city: opt(&a.city),
            state: opt(&a.state),
            nation: opt(&a.nation),
            lat: a.point.map(|p| p.lat),
            lon: a.point.map(|p| p.lon),
        }
    }
}

/// A containment region: either a coordinate box or an administrative prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Bounds(BBox),
    /// nation[, state[, city]]; the street field is always blank.
    Prefix(ExactAddress),
}

impl Region {
    pub fn prefix(nation: &str, state: Option<&str>, city: Option<&str>) -> Region {
        Region::Prefix(ExactAddress::new("", city.unwrap_or(""), state.unwrap_or(""), nation))
    }

    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        match self {
            Region::Bounds(b) => b.contains_point(p),
            Region::Prefix(_) => false,
        }
    }

    pub fn contains_address(&self, a: &ExactAddress) -> bool {
        match self {
            Region::Prefix(prefix) => prefix.covers(a),
            Region::Bounds(b) => a.point.is_some_and(|p| b.contains_point(&p)),
        }
    }

    pub fn contains(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Bounds(a), Region::Bounds(b)) => a.contains_bbox(b),
            (Region::Prefix(a), Region::Prefix(b)) => a.covers(b),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_case_and_whitespace() {
        assert_eq!(normalize_text("  Rue   Thomas\tMANN "), "rue thomas mann");
        let a = ExactAddress::new("Gym  St", "Springfield", " IL", "US");
        let b = ExactAddress::new("gym st", "springfield", "il", "us");
        assert!(a.same_key(&b));
    }

    #[test]
    fn well_formedness_requires_coarser_fields() {
        assert!(ExactAddress::new("gym st", "springfield", "il", "us").is_well_formed());
        assert!(ExactAddress::new("", "paris", "idf", "fr").is_well_formed());
        assert!(ExactAddress::new("", "", "", "fr").is_well_formed());
        assert!(!ExactAddress::new("gym st", "", "il", "us").is_well_formed());
        assert!(!ExactAddress::new("", "paris", "", "fr").is_well_formed());
        assert!(!ExactAddress::new("x", "y", "z", "").is_well_formed());
    }

    #[test]
    fn city_level_address_covers_streets_in_city() {
        let paris = ExactAddress::new("", "paris", "idf", "fr");
        let univ = ExactAddress::new("5 rue thomas mann", "paris", "idf", "fr");
        assert!(paris.covers(&univ));
        assert!(!univ.covers(&paris));
        assert!(univ.covers(&univ));
        let lyon = ExactAddress::new("1 place bellecour", "lyon", "ara", "fr");
        assert!(!paris.covers(&lyon));
    }

    #[test]
    fn prefixes_are_coarsest_first() {
        let univ = ExactAddress::new("5 rue thomas mann", "paris", "idf", "fr");
        let p: Vec<String> = univ.prefixes().map(|a| a.to_string()).collect();
        assert_eq!(p, vec!["fr", "idf, fr", "paris, idf, fr", "5 rue thomas mann, paris, idf, fr"]);
    }

    #[test]
    fn ordering_groups_by_administrative_prefix() {
        let a = ExactAddress::new("z st", "aville", "s1", "n1");
        let b = ExactAddress::new("a st", "bville", "s1", "n1");
        let c = ExactAddress::new("", "", "", "n1");
        assert_eq!(a.cmp_key(&b), Ordering::Less);
        assert_eq!(c.cmp_key(&a), Ordering::Less);
    }

    #[test]
    fn geopoint_range_checks() {
        assert!(GeoPoint::new(48.8, 2.3).is_some());
        assert!(GeoPoint::new(91.0, 0.0).is_none());
        assert!(GeoPoint::new(0.0, -180.5).is_none());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_none());
    }

    #[test]
    fn bbox_region_contains_point_within_bounds() {
        let r = Region::Bounds(BBox { min: GeoPoint { lat: 1.0, lon: 1.0 }, max: GeoPoint { lat: 2.0, lon: 3.0 } });
        assert!(r.contains_point(&GeoPoint { lat: 1.0, lon: 3.0 }));
        assert!(!r.contains_point(&GeoPoint { lat: 0.99, lon: 2.0 }));
        assert!(r.contains(&r));
    }

    #[test]
    fn prefix_region_containment_is_transitive() {
        let nation = Region::prefix("fr", None, None);
        let state = Region::prefix("fr", Some("idf"), None);
        let city = Region::prefix("fr", Some("idf"), Some("paris"));
        assert!(nation.contains(&state) && state.contains(&city) && nation.contains(&city));
        assert!(!city.contains(&state));
        assert!(city.contains_address(&ExactAddress::new("5 rue thomas mann", "paris", "idf", "fr")));
    }

    #[test]
    fn document_round_trip_keeps_point() {
        let a = ExactAddress::new("5 Rue Thomas Mann", "Paris", "IDF", "FR").with_point(GeoPoint { lat: 48.83, lon: 2.38 });
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"street":"5 rue thomas mann","city":"paris","state":"idf","nation":"fr","lat":48.83,"lon":2.38}"#);
        let back: ExactAddress = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn lone_latitude_is_rejected() {
        let doc = AddressDocument { nation: Some("fr".into()), lat: Some(1.0), ..Default::default() };
        assert!(doc.address().is_err());
    }
}
