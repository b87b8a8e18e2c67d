/// A permutation of `0..n` with its inversion pairs `(alpha, beta)`,
/// `alpha > beta`, where `alpha = sigma(i)`, `beta = sigma(j)` and `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub images: Vec<usize>,
    pub inversions: Vec<(usize, usize)>,
}

impl Permutation {
    fn from_images(images: Vec<usize>) -> Self {
        let n = images.len();
        let mut inversions = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if images[i] > images[j] {
                    inversions.push((images[i], images[j]));
                }
            }
        }
        Self { images, inversions }
    }

    pub fn is_identity(&self) -> bool {
        self.inversions.is_empty()
    }

    pub fn sign(&self) -> f64 {
        if self.inversions.len() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `inverse[alpha] = i` with `images[i] = alpha`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.images.len()];
        for (i, &a) in self.images.iter().enumerate() {
            inv[a] = i;
        }
        inv
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Permutation> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation::from_images(current.clone())];
    while next_permutation(&mut current) {
        out.push(Permutation::from_images(current.clone()));
    }
    out
}

fn next_permutation(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}
