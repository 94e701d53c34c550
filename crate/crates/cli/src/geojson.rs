//! Minimal GeoJSON output types: a FeatureCollection of Point features
//! with fixed property order, serialized with serde so the bytes are
//! stable across runs.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FeatureCollection {
    pub r#type: &'static str,
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Feature {
    pub r#type: &'static str,
    pub geometry: Geometry,
    pub properties: Properties,
}

#[derive(Debug, Clone, Serialize)]
pub struct Geometry {
    pub r#type: &'static str,
    /// GeoJSON position order: [longitude, latitude].
    pub coordinates: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Properties {
    pub risk: f64,
    pub alpha: f64,
    pub beta: f64,
    pub std_dev: f64,
    pub label: u8,
}

pub fn point(lon: f64, lat: f64, properties: Properties) -> Feature {
    Feature {
        r#type: "Feature",
        geometry: Geometry {
            r#type: "Point",
            coordinates: [lon, lat],
        },
        properties,
    }
}

pub fn collection(features: Vec<Feature>) -> FeatureCollection {
    FeatureCollection {
        r#type: "FeatureCollection",
        features,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_with_geojson_field_names_and_lon_lat_order() {
        let fc = collection(vec![point(
            0.25,
            -0.125,
            Properties {
                risk: 0.996376811594203,
                alpha: 22.0,
                beta: 0.08,
                std_dev: 0.01,
                label: 1,
            },
        )]);
        let json = serde_json::to_string(&fc).unwrap();
        assert!(json.contains("\"type\":\"FeatureCollection\""));
        assert!(json.contains("\"type\":\"Feature\""));
        assert!(json.contains("\"type\":\"Point\""));
        assert!(json.contains("\"coordinates\":[0.25,-0.125]"));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["features"][0]["properties"]["label"], 1);
    }
}
