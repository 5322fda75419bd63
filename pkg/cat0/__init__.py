# CAT(0) Polyhedral Complex Toolkit
