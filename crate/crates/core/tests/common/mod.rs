pub mod scheme_oracle;
