//! Worked examples bundled as text, in the block formats of [`crate::syntax`].

macro_rules! fixtures {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(pub const $name: &str = include_str!(concat!("../../../fixtures/", $file));)*

        /// `(file name, contents)` for every bundled example.
        pub const ALL: &[(&str, &str)] = &[$(($file, $name)),*];
    };
}

fixtures! {
    HOM_IMAGE_WTA => "hom_image.wta",
    HOM_IMAGE_HOM => "hom_image.hom",
    FIRST_EX_WTAH => "first_ex.wtah",
    FIRST_EX_NOT_EQ_WTAH => "first_ex_not_eq.wtah",
    TETRIS_HOM => "tetris.hom",
    TETRIS_PRIME_HOM => "tetris_prime.hom",
    TETRIS_WTA => "tetris.wta",
    HOM_PHI_HOM => "hom_phi.hom",
    B_WTA => "b.wta",
    B_PRIME_WTAH => "b_prime.wtah",
    HOM_KAPPA_HOM => "hom_kappa.hom",
    C_WTA => "c.wta",
    C_PRIME_WTAH => "c_prime.wtah",
    SUBSEQUENCE_WTAH => "subsequence.wtah",
    SUBSEQUENCE_WTA => "subsequence.wta",
    SUBSEQUENCE_HOM => "subsequence.hom",
    FINAL_EXAMPLE_WTAH => "final_example.wtah",
    FIN_WTA => "fin.wta",
    FIN_HOM => "fin.hom",
    FIN_WTAH => "fin.wtah",
    RELABEL_HOM => "relabel.hom",
}
