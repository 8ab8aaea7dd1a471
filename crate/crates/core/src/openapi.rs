// SPDX-License-Identifier: Apache-2.0

//! Schemas for the types whose serde form is hand-written.

use utoipa::openapi::schema::{ArrayBuilder, ObjectBuilder, Schema, SchemaFormat, KnownFormat, Type};
use utoipa::openapi::RefOr;
use utoipa::{PartialSchema, ToSchema};

use crate::domain::{AdmKey, AdmLevel, EpiWeek, FieldError, Geocode, ImplementationLanguage, Uf, ValidationErrors};

fn schema(b: ObjectBuilder) -> RefOr<Schema> {
    RefOr::T(Schema::Object(b.build()))
}

impl PartialSchema for Uf {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::String)
                .description(Some(
                    "Brazilian state as a two-letter UF. Inputs may also use the two-digit IBGE state code.",
                ))
                .enum_values(Some(Uf::all().map(Uf::abbrev))),
        )
    }
}
impl ToSchema for Uf {}

impl PartialSchema for Geocode {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::Integer)
                .format(Some(SchemaFormat::KnownFormat(KnownFormat::Int32)))
                .description(Some("7-digit IBGE municipality geocode"))
                .minimum(Some(1_100_000))
                .maximum(Some(5_399_999)),
        )
    }
}
impl ToSchema for Geocode {}

impl PartialSchema for AdmLevel {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::Integer)
                .description(Some("0 national, 1 state, 2 municipality, 3 sub-municipality"))
                .enum_values(Some([0, 1, 2, 3])),
        )
    }
}
impl ToSchema for AdmLevel {}

impl PartialSchema for AdmKey {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::String)
                .description(Some("Spatial unit: country code, UF, or geocode")),
        )
    }
}
impl ToSchema for AdmKey {}

impl PartialSchema for EpiWeek {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::Integer)
                .format(Some(SchemaFormat::KnownFormat(KnownFormat::Int32)))
                .description(Some("Epidemiological week encoded YYYYWW"))
                .examples([202401]),
        )
    }
}
impl ToSchema for EpiWeek {}

impl PartialSchema for ImplementationLanguage {
    fn schema() -> RefOr<Schema> {
        schema(
            ObjectBuilder::new()
                .schema_type(Type::String)
                .enum_values(Some(ImplementationLanguage::ALL.map(ImplementationLanguage::as_str))),
        )
    }
}
impl ToSchema for ImplementationLanguage {}

impl PartialSchema for ValidationErrors {
    fn schema() -> RefOr<Schema> {
        RefOr::T(Schema::Array(
            ArrayBuilder::new().items(FieldError::schema()).min_items(Some(1)).build(),
        ))
    }
}
impl ToSchema for ValidationErrors {
    fn schemas(out: &mut Vec<(String, RefOr<Schema>)>) {
        out.push((FieldError::name().into(), FieldError::schema()));
    }
}
