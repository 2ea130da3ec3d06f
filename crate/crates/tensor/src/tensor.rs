//! The dense tensor type: flat row-major f64 storage plus shape metadata,
//! an optional gradient buffer, and the operation record used by backward.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Result, TensorError};
use crate::ops::Op;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

pub(crate) struct Node {
    pub(crate) id: u64,
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Vec<f64>,
    pub(crate) grad: Option<Vec<f64>>,
    pub(crate) requires_grad: bool,
    pub(crate) op: Op,
}

/// Dense multi-dimensional array of f64 with shape metadata and an optional
/// gradient slot. Cloning is cheap: clones share the same underlying node, so
/// a parameter handle kept by the caller sees gradients written by
/// [`Tensor::backward`] and data written by an optimizer.
///
/// Graph recording and the backward pass are single-threaded; tensors created
/// with recording disabled are plain immutable values.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) node: Rc<RefCell<Node>>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = self.node.borrow();
        f.debug_struct("Tensor")
            .field("shape", &n.shape)
            .field("requires_grad", &n.requires_grad)
            .field("numel", &n.data.len())
            .finish()
    }
}

pub(crate) fn checked_numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major strides for a shape.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

impl Tensor {
    pub(crate) fn from_node(node: Node) -> Tensor {
        Tensor {
            node: Rc::new(RefCell::new(node)),
        }
    }

    pub(crate) fn new_leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Tensor {
        Tensor::from_node(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data,
            grad: None,
            requires_grad,
            op: Op::Leaf,
        })
    }

    pub(crate) fn new_result(data: Vec<f64>, shape: Vec<usize>, op: Op) -> Tensor {
        let requires_grad = !matches!(op, Op::Leaf);
        Tensor::from_node(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data,
            grad: None,
            requires_grad,
            op,
        })
    }

    /// Build a tensor from a flat row-major buffer. Fails unless
    /// `product(shape) == data.len()`.
    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        if checked_numel(shape) != data.len() {
            return Err(TensorError::InvalidShape {
                op: "from_vec",
                shape: shape.to_vec(),
                reason: format!("shape wants {} values, got {}", checked_numel(shape), data.len()),
            });
        }
        Ok(Tensor::new_leaf(data, shape.to_vec(), false))
    }

    /// Rank-0 tensor holding a single value.
    pub fn scalar(v: f64) -> Tensor {
        Tensor::new_leaf(vec![v], Vec::new(), false)
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::new_leaf(vec![0.0; checked_numel(shape)], shape.to_vec(), false)
    }

    pub fn ones(shape: &[usize]) -> Tensor {
        Tensor::full(shape, 1.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Tensor {
        Tensor::new_leaf(vec![value; checked_numel(shape)], shape.to_vec(), false)
    }

    /// Mark a leaf as trainable so backward writes its gradient.
    pub fn with_requires_grad(self) -> Tensor {
        self.node.borrow_mut().requires_grad = true;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.node.borrow().requires_grad
    }

    pub fn shape(&self) -> Vec<usize> {
        self.node.borrow().shape.clone()
    }

    pub fn rank(&self) -> usize {
        self.node.borrow().shape.len()
    }

    pub fn numel(&self) -> usize {
        self.node.borrow().data.len()
    }

    pub(crate) fn id(&self) -> u64 {
        self.node.borrow().id
    }

    /// Copy of the flat row-major data.
    pub fn data(&self) -> Vec<f64> {
        self.node.borrow().data.clone()
    }

    /// Read the data without copying it out.
    pub fn with_data<R>(&self, f: impl FnOnce(&[f64]) -> R) -> R {
        f(&self.node.borrow().data)
    }

    /// The single value of a one-element tensor.
    ///
    /// Panics if `numel != 1`; callers use it on scalars they just reduced.
    pub fn item(&self) -> f64 {
        let n = self.node.borrow();
        assert!(n.data.len() == 1, "item() on tensor with {} elements", n.data.len());
        n.data[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.node.borrow().grad.clone()
    }

    pub fn zero_grad(&self) {
        self.node.borrow_mut().grad = None;
    }

    /// Overwrite the data in place (optimizer updates, finite differencing).
    /// The new buffer must match the current element count.
    pub fn set_data(&self, values: &[f64]) -> Result<()> {
        let mut n = self.node.borrow_mut();
        if values.len() != n.data.len() {
            return Err(TensorError::Contract(format!(
                "set_data: expected {} values, got {}",
                n.data.len(),
                values.len()
            )));
        }
        n.data.copy_from_slice(values);
        Ok(())
    }

    pub(crate) fn value_at(&self, idx: usize) -> f64 {
        self.node.borrow().data[idx]
    }

    pub(crate) fn set_value_at(&self, idx: usize, v: f64) {
        self.node.borrow_mut().data[idx] = v;
    }

    /// Detached copy: same data, fresh leaf, no gradient history.
    pub fn detach(&self) -> Tensor {
        let n = self.node.borrow();
        Tensor::new_leaf(n.data.clone(), n.shape.clone(), false)
    }

    pub fn is_finite(&self) -> bool {
        self.node.borrow().data.iter().all(|v| v.is_finite())
    }
}
