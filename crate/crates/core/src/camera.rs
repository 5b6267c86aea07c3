//! Pinhole camera shared by the rasterizer and the ray-traced oracle.
//!
//! Camera space looks down −Z with +Y up. Screen space has its origin at the
//! top-left image corner, `y` growing downwards, pixel centers at half
//! integers. Normalized depth is `far/(far−near) · (1 − near/w)` with
//! `w = −z_camera`, so it is 0 at the near plane and 1 at the far plane.

use crate::math::{tan, Rigid, Vec3, DEG};

/// Default vertical field of view in degrees (head framing).
pub const DEFAULT_FOV_DEG: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    /// World → camera transform.
    pub view: Rigid,
    pub fov_y_deg: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Camera::orbit(0.0, 0.0, 9.0)
    }
}

/// Result of projecting one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    /// Screen position in pixels.
    pub screen: [f64; 2],
    /// Normalized depth in `[0, 1]` for visible points.
    pub depth: f64,
    /// Positive distance along the view axis.
    pub w: f64,
    /// False when the point is at or behind the near plane.
    pub in_front: bool,
}

impl Camera {
    pub fn new(view: Rigid, fov_y_deg: f64) -> Self {
        Self {
            view,
            fov_y_deg,
            near: 0.1,
            far: 100.0,
        }
    }

    /// Camera on a sphere of radius `distance` around the origin, looking at
    /// it. `yaw`/`pitch` in degrees; zero places the camera on +Z.
    pub fn orbit(yaw_deg: f64, pitch_deg: f64, distance: f64) -> Self {
        let (yaw, pitch) = (yaw_deg * DEG, pitch_deg * DEG);
        let eye = Vec3::new(
            distance * crate::math::sin(yaw) * crate::math::cos(pitch),
            distance * crate::math::sin(pitch),
            distance * crate::math::cos(yaw) * crate::math::cos(pitch),
        );
        Camera::new(Rigid::look_at(eye, Vec3::ZERO, Vec3::Y), DEFAULT_FOV_DEG)
    }

    pub fn position(&self) -> Vec3 {
        self.view.inverse().translation
    }

    #[inline]
    pub fn tan_half_fov(&self) -> f64 {
        tan(0.5 * self.fov_y_deg * DEG)
    }

    /// Unit camera-space direction through a screen point.
    #[inline]
    pub fn camera_ray(&self, sx: f64, sy: f64, width: usize, height: usize) -> Vec3 {
        let t = self.tan_half_fov();
        let aspect = width as f64 / height as f64;
        let ndc_x = 2.0 * sx / width as f64 - 1.0;
        let ndc_y = 1.0 - 2.0 * sy / height as f64;
        Vec3::new(ndc_x * t * aspect, ndc_y * t, -1.0).normalize()
    }

    /// World-space ray `(origin, direction)` through the center of pixel
    /// `(px, py)`.
    pub fn pixel_ray(&self, px: usize, py: usize, width: usize, height: usize) -> (Vec3, Vec3) {
        let d_cam = self.camera_ray(px as f64 + 0.5, py as f64 + 0.5, width, height);
        let inv = self.view.inverse();
        (inv.translation, inv.apply_vector(d_cam))
    }

    #[inline]
    pub fn depth_from_w(&self, w: f64) -> f64 {
        self.far / (self.far - self.near) * (1.0 - self.near / w)
    }

    /// Perspective projection of a world-space point.
    pub fn project(&self, p: Vec3, width: usize, height: usize) -> Projected {
        self.project_camera_space(self.view.apply(p), width, height)
    }

    pub fn project_camera_space(&self, pc: Vec3, width: usize, height: usize) -> Projected {
        let w = -pc.z;
        let in_front = w > self.near;
        let t = self.tan_half_fov();
        let aspect = width as f64 / height as f64;
        let safe_w = if in_front { w } else { self.near };
        let ndc_x = pc.x / (safe_w * t * aspect);
        let ndc_y = pc.y / (safe_w * t);
        Projected {
            screen: [
                (ndc_x + 1.0) * 0.5 * width as f64,
                (1.0 - ndc_y) * 0.5 * height as f64,
            ],
            depth: self.depth_from_w(safe_w),
            w,
            in_front,
        }
    }
}
