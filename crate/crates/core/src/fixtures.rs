//! Reference instances bundled with the crate.

use crate::cost::CostMatrix;

pub const EX4: &str = include_str!("../fixtures/ex4.txt");
pub const EX5: &str = include_str!("../fixtures/ex5.txt");
pub const EX6: &str = include_str!("../fixtures/ex6.txt");
pub const EX7: &str = include_str!("../fixtures/ex7.txt");
pub const EX8: &str = include_str!("../fixtures/ex8.txt");
pub const EX9: &str = include_str!("../fixtures/ex9.txt");
pub const EX10: &str = include_str!("../fixtures/ex10.txt");

fn load(text: &str) -> CostMatrix {
    CostMatrix::parse(text).expect("bundled fixture parses")
}

pub fn ex4() -> CostMatrix {
    load(EX4)
}

pub fn ex5() -> CostMatrix {
    load(EX5)
}

pub fn ex6() -> CostMatrix {
    load(EX6)
}

pub fn ex7() -> CostMatrix {
    load(EX7)
}

pub fn ex8() -> CostMatrix {
    load(EX8)
}

pub fn ex9() -> CostMatrix {
    load(EX9)
}

pub fn ex10() -> CostMatrix {
    load(EX10)
}
